use std::path::Path;

use radviz3d::evalsim::{discretize_deciles, simulate_mixture, MixtureSpec};
use radviz3d::pipeline::{run_project, PipelineConfig, PipelineError, ProjectOptions, Screening, EXIT_CONTRACT, EXIT_IO};
use radviz3d::radviz::{Method, Scene};

fn write_desk_csv(path: &Path, spread: f64, seed: u64) {
    let data = simulate_mixture(&MixtureSpec::desk_scale(spread, 500, seed)).unwrap();
    let data = discretize_deciles(&data, &(0..10).collect::<Vec<_>>()).unwrap();
    data.write_csv(std::fs::File::create(path).unwrap()).unwrap();
}

fn config(dir: &Path, input: &Path, options: ProjectOptions) -> PipelineConfig {
    PipelineConfig {
        input: input.to_path_buf(),
        label_column: "label".into(),
        kinds: None,
        options,
        out_dir: dir.join("out"),
    }
}

#[test]
fn desk_scale_run_writes_stamped_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sim.csv");
    write_desk_csv(&input, 3.0, 1);
    let out = run_project(&config(dir.path(), &input, ProjectOptions { seed: 5, ..Default::default() })).unwrap();

    assert_eq!(out.report.k, 4);
    assert_eq!(out.scene.anchors.len(), 4);
    for i in 0..out.scene.points.nrows() {
        assert!(out.scene.points.row(i).norm() <= 1.0 + 1e-12);
    }
    // auto screening is on because half the features are binned
    assert!(out.report.screening.is_some());

    let hash = &out.report.config_hash;
    for path in [&out.scene_json, &out.points_csv, &out.anchors_csv, &out.report_json] {
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.contains(hash.as_str()), "{} lacks the config hash", path.display());
    }
    let scene = Scene::from_json(&std::fs::read_to_string(&out.scene_json).unwrap()).unwrap();
    assert_eq!(scene.metadata.seed, Some(5));
    assert_eq!(scene.anchor_names, ["MRP1", "MRP2", "MRP3", "MRP4"]);
    assert_eq!(scene.points, out.scene.points);
}

#[test]
fn output_location_does_not_change_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sim.csv");
    write_desk_csv(&input, 3.0, 2);
    let mut cfg = config(dir.path(), &input, ProjectOptions::default());
    let a = run_project(&cfg).unwrap();
    cfg.out_dir = dir.path().join("elsewhere");
    let b = run_project(&cfg).unwrap();
    assert_eq!(a.report.config_hash, b.report.config_hash);
    assert_eq!(std::fs::read(&a.scene_json).unwrap(), std::fs::read(&b.scene_json).unwrap());
    cfg.options.seed = 99;
    assert_ne!(run_project(&cfg).unwrap().report.config_hash, a.report.config_hash);
}

#[test]
fn two_groups_report_three_padded_directions() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("two.csv");
    let spec = MixtureSpec::spherical(2, 6, 3.0, 200, 4);
    simulate_mixture(&spec).unwrap().write_csv(std::fs::File::create(&input).unwrap()).unwrap();
    let out = run_project(&config(dir.path(), &input, ProjectOptions::default())).unwrap();
    assert_eq!((out.report.informative, out.report.padded, out.report.k), (1, 3, 4));
    assert!(out.report.warnings.iter().any(|w| w.contains("3 directions")));
}

#[test]
fn forced_screening_keeps_informative_features() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sep.csv");
    let spec = MixtureSpec::spherical(3, 5, 8.0, 300, 6);
    simulate_mixture(&spec).unwrap().write_csv(std::fs::File::create(&input).unwrap()).unwrap();
    let options = ProjectOptions { screening: Screening::On, ..Default::default() };
    let out = run_project(&config(dir.path(), &input, options)).unwrap();
    let s = out.report.screening.unwrap();
    assert!(s.keep_mask.iter().all(|&k| k));
    assert_eq!(s.dropped, 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out.report_json).unwrap()).unwrap();
    assert_eq!(report["screening"]["dropped"], 0);
}

#[test]
fn every_method_runs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sim.csv");
    write_desk_csv(&input, 3.0, 3);
    for method in [Method::Radviz2d, Method::Viz3d] {
        let out = run_project(&config(dir.path(), &input, ProjectOptions { method, ..Default::default() })).unwrap();
        assert_eq!(out.scene.method, method);
    }
}

#[test]
fn errors_carry_stage_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    std::fs::write(&input, "a,b,label\n1,,x\n2,3,y\n").unwrap();
    let err = run_project(&config(dir.path(), &input, ProjectOptions::default())).unwrap_err();
    assert!(matches!(err, PipelineError::Ingest(_)));
    assert!(err.to_string().starts_with("ingest:"));
    assert_eq!(err.exit_code(), EXIT_CONTRACT);

    std::fs::write(&input, "a,label\n1,x\n2,x\n3,x\n").unwrap();
    let err = run_project(&config(dir.path(), &input, ProjectOptions::default())).unwrap_err();
    assert!(err.to_string().starts_with("screening:"), "{err}");
    assert_eq!(err.exit_code(), EXIT_CONTRACT);

    let missing = config(dir.path(), &dir.path().join("nope.csv"), ProjectOptions::default());
    assert_eq!(run_project(&missing).unwrap_err().exit_code(), EXIT_IO);
}
