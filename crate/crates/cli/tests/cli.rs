use std::path::Path;
use std::process::{Command, Output};

use radviz3d::evalsim::{discretize_deciles, simulate_mixture, MixtureSpec};
use radviz3d::pipeline::{project_dataset, ProjectOptions};
use radviz3d::radviz::Scene;
use radviz3d::parse_csv;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radviz3d")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn anchors_print_the_octahedron() {
    let out = run(&["anchors", "--p", "6"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("j,x,y,z"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').skip(1).map(|c| c.parse().unwrap()).collect()).collect();
    let want = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    assert_eq!(rows.len(), 6);
    for (row, w) in rows.iter().zip(want) {
        assert_eq!(row.as_slice(), w.as_slice());
    }
}

#[test]
fn circle_anchors_and_too_few() {
    let out = run(&["anchors", "--p", "5", "--scheme", "circle"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 6);

    let out = run(&["anchors", "--p", "3", "--scheme", "sphere"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stderr).unwrap().contains("at least 4"));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&["anchors", "--p", "six"])), 64);
    assert_eq!(code(&run(&["project"])), 64);
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(code(&run(&["project", "--input", "x.csv", "--method", "radviz4d"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn io_and_contract_failures() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = run(&["project", "--input", arg(&missing), "--out-dir", arg(dir.path())]);
    assert_eq!(code(&out), 2);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b,label\n1,x,g\n2,3,h\n").unwrap();
    let out = run(&["project", "--input", arg(&bad), "--out-dir", arg(dir.path())]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stderr).unwrap().contains("ingest:"));

    let out = run(&["project", "--input", arg(&bad), "--alpha", "2", "--out-dir", arg(dir.path())]);
    assert_eq!(code(&out), 1);
}

#[test]
fn simulate_then_project_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sim.csv");
    let out = run(&["simulate", "--seed", "3", "--out", arg(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let spec = MixtureSpec::desk_scale(3.0, 500, 3);
    let echo = std::fs::read_to_string(dir.path().join("sim.csv.spec.json")).unwrap();
    assert_eq!(MixtureSpec::from_json(&echo).unwrap(), spec);

    let data = discretize_deciles(&simulate_mixture(&spec).unwrap(), &(0..10).collect::<Vec<_>>()).unwrap();
    let mut expected_csv = Vec::new();
    data.write_csv(&mut expected_csv).unwrap();
    let written = std::fs::read(&csv).unwrap();
    assert_eq!(written, expected_csv);

    let out_dir = dir.path().join("scene");
    let out = run(&["project", "--input", arg(&csv), "--seed", "3", "--out-dir", arg(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let scene = Scene::from_json(&std::fs::read_to_string(out_dir.join("scene.json")).unwrap()).unwrap();

    let parsed = parse_csv(written.as_slice(), "label", None).unwrap();
    let options = ProjectOptions { seed: 3, ..Default::default() };
    let (lib, _) = project_dataset(&parsed, &options, "label", None).unwrap();
    assert_eq!(scene.points, lib.points);
    assert_eq!(scene.labels, lib.labels);
    assert_eq!(scene.anchors.points, lib.anchors.points);
    assert_eq!(scene.anchors.len(), 4);

    for name in ["points.csv", "anchors.csv", "run_report.json"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
}

#[test]
fn overlap_writes_a_symmetric_map() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, MixtureSpec::spherical(3, 2, 2.0, 50, 1).to_json()).unwrap();
    let out = run(&["overlap", "--spec", arg(&spec_path), "--samples", "10000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').skip(1).map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for i in 0..3 {
        assert_eq!(rows[i][i], 0.0);
        for j in 0..3 {
            assert_eq!(rows[i][j], rows[j][i]);
        }
    }

    std::fs::write(&spec_path, "{\"means\": [[0]], \"covariances\": [[[-1]]], \"proportions\": [1], \"n\": 5, \"seed\": 0}").unwrap();
    let out = run(&["overlap", "--spec", arg(&spec_path)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stderr).unwrap().contains("positive definite"));
}
