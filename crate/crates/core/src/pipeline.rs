//! End-to-end projection: ingest, distributional transform, optional
//! screening, max-ratio projection and the radial scene, with every output
//! stamped with the seed and a configuration hash.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evalsim::EvalError;
use crate::gdt::{anova_screen, GdtError, GdtModel, ScreeningReport, DEFAULT_FDR_ALPHA};
use crate::ingest::{load_kinds, parse_csv, Dataset, FeatureKind, IngestError};
use crate::mrp::{mrp_fit, KPolicy, MrpError, DEFAULT_VARIANCE_MASS};
use crate::radviz::{make_scene, Method, RadvizError, Scene};

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for inputs or parameters that violate a stage contract.
pub const EXIT_CONTRACT: i32 = 1;
/// Exit code for unreadable inputs or unwritable outputs.
pub const EXIT_IO: i32 = 2;
/// Exit code for malformed command-line usage.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Screening {
    /// On when any feature is discrete.
    #[default]
    Auto,
    On,
    Off,
}

impl std::str::FromStr for Screening {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Screening::Auto),
            "on" => Ok(Screening::On),
            "off" => Ok(Screening::Off),
            other => Err(format!("unknown screening mode `{other}`")),
        }
    }
}

/// Parameters that shape the projection, independent of where data comes
/// from or where results go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectOptions {
    pub seed: u64,
    pub fdr_alpha: f64,
    pub variance_mass: f64,
    pub method: Method,
    pub screening: Screening,
    pub k: Option<usize>,
}

impl Default for ProjectOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            fdr_alpha: DEFAULT_FDR_ALPHA,
            variance_mass: DEFAULT_VARIANCE_MASS,
            method: Method::Radviz3d,
            screening: Screening::Auto,
            k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub label_column: String,
    /// Optional `name kind` lines overriding inferred feature kinds.
    pub kinds: Option<PathBuf>,
    pub options: ProjectOptions,
    pub out_dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("gdt: {0}")]
    Gdt(GdtError),
    #[error("screening: {0}")]
    Screening(GdtError),
    #[error("screening: no feature passed at alpha = {0}")]
    NothingKept(f64),
    #[error("mrp: {0}")]
    Mrp(#[from] MrpError),
    #[error("radviz: {0}")]
    Radviz(#[from] RadvizError),
    #[error("evalsim: {0}")]
    Eval(#[from] EvalError),
    #[error("io: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. } | PipelineError::Ingest(IngestError::Io(_)) => EXIT_IO,
            PipelineError::Ingest(IngestError::Csv(e)) if matches!(e.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
            _ => EXIT_CONTRACT,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Screening outcome as written to the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningSummary {
    pub alpha: f64,
    pub f_stats: Vec<Option<f64>>,
    pub p_values: Vec<f64>,
    pub keep_mask: Vec<bool>,
    pub kept: Vec<String>,
    pub dropped: usize,
}

impl ScreeningSummary {
    fn new(report: &ScreeningReport, names: &[String]) -> Self {
        let kept = names.iter().zip(&report.keep_mask).filter(|(_, k)| **k).map(|(n, _)| n.clone()).collect();
        Self {
            alpha: report.alpha,
            f_stats: report.f_stats.iter().map(|f| f.is_finite().then_some(*f)).collect(),
            p_values: report.p_values.clone(),
            keep_mask: report.keep_mask.clone(),
            kept,
            dropped: report.keep_mask.iter().filter(|k| !**k).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub config_hash: String,
    pub input_sha256: Option<String>,
    pub options: ProjectOptions,
    pub records: usize,
    pub features: usize,
    pub groups: Vec<String>,
    pub feature_kinds: BTreeMap<String, FeatureKind>,
    pub screening: Option<ScreeningSummary>,
    pub eigenvalues: Vec<f64>,
    pub k: usize,
    pub informative: usize,
    pub padded: usize,
    pub warnings: Vec<String>,
}

/// Stable hash of the options and input bytes. Output locations are left
/// out so that the same data and options hash the same wherever they go.
pub fn config_hash(options: &ProjectOptions, input_sha256: Option<&str>, label_column: &str) -> String {
    let doc = serde_json::json!({
        "options": options,
        "input_sha256": input_sha256,
        "label_column": label_column,
    });
    hex::encode(Sha256::digest(doc.to_string().as_bytes()))
}

fn validate(options: &ProjectOptions) -> Result<(), PipelineError> {
    if !(options.fdr_alpha > 0.0 && options.fdr_alpha < 1.0) {
        return Err(PipelineError::Config(format!("alpha must lie in (0, 1), got {}", options.fdr_alpha)));
    }
    if !(options.variance_mass > 0.0 && options.variance_mass <= 1.0) {
        return Err(PipelineError::Config(format!("mass must lie in (0, 1], got {}", options.variance_mass)));
    }
    if options.k == Some(0) {
        return Err(PipelineError::Config("k must be positive".into()));
    }
    Ok(())
}

/// Runs every stage on an in-memory dataset. `config_hash` and the input
/// digest are recorded as given.
pub fn project_dataset(
    data: &Dataset,
    options: &ProjectOptions,
    label_column: &str,
    input_sha256: Option<&str>,
) -> Result<(Scene, RunReport), PipelineError> {
    validate(options)?;
    let hash = config_hash(options, input_sha256, label_column);
    let mut warnings = Vec::new();
    let mut stages = vec!["ingest".to_string(), "gdt".to_string()];

    let model = GdtModel::fit(data.values(), data.names(), options.seed).map_err(PipelineError::Gdt)?;
    let transformed = model.transform(data.values()).map_err(PipelineError::Gdt)?;

    let screen = match options.screening {
        Screening::On => true,
        Screening::Off => false,
        Screening::Auto => data.has_discrete(),
    };
    let (features, screening) = if screen {
        stages.push("screening".into());
        let report = anova_screen(&transformed, data.labels(), options.fdr_alpha).map_err(PipelineError::Screening)?;
        let keep: Vec<usize> = (0..data.p()).filter(|&j| report.keep_mask[j]).collect();
        if keep.is_empty() {
            return Err(PipelineError::NothingKept(options.fdr_alpha));
        }
        let summary = ScreeningSummary::new(&report, data.names());
        if summary.dropped > 0 {
            log::info!("screening dropped {} of {} features", summary.dropped, data.p());
        }
        (transformed.select_columns(&keep), Some(summary))
    } else {
        (transformed, None)
    };

    stages.push("mrp".into());
    let policy = match options.k {
        Some(k) => KPolicy::Fixed(k),
        None => KPolicy::Mass { mass: options.variance_mass },
    };
    let (mrp, projected) = mrp_fit(&features, data.labels(), policy)?;
    if let Some(k) = options.k {
        if k > mrp.k {
            warnings.push(format!("requested k = {k} exceeds the {} available directions", mrp.k));
        }
    }
    if mrp.padded > 0 {
        warnings.push(format!("{} directions beyond the {} informative ones are shown", mrp.padded, mrp.k - mrp.padded));
    }

    stages.push(options.method.to_string());
    let mut scene = make_scene(&projected, data.labels(), options.method)?;
    scene.anchor_names = (1..=mrp.k).map(|j| format!("MRP{j}")).collect();
    if !scene.metadata.origin_records.is_empty() {
        warnings.push(format!("{} records have zero coordinate sum and sit at the origin", scene.metadata.origin_records.len()));
    }
    scene.metadata.seed = Some(options.seed);
    scene.metadata.config_hash = Some(hash.clone());
    scene.metadata.stages = stages;
    for w in &warnings {
        log::warn!("{w}");
    }

    let report = RunReport {
        seed: options.seed,
        config_hash: hash,
        input_sha256: input_sha256.map(str::to_string),
        options: options.clone(),
        records: data.n(),
        features: data.p(),
        groups: data.group_names().to_vec(),
        feature_kinds: data.names().iter().cloned().zip(data.kinds().iter().copied()).collect(),
        screening,
        eigenvalues: mrp.eigenvalues.iter().copied().collect(),
        k: mrp.k,
        informative: mrp.k - mrp.padded,
        padded: mrp.padded,
        warnings,
    };
    Ok((scene, report))
}

/// Files written by [`run_project`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub scene: Scene,
    pub report: RunReport,
    pub scene_json: PathBuf,
    pub points_csv: PathBuf,
    pub anchors_csv: PathBuf,
    pub report_json: PathBuf,
}

fn stamp(csv: &str, seed: u64, hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# seed={seed} config_hash={hash}");
    s.push_str(csv);
    s
}

/// Reads the input CSV, runs [`project_dataset`] and writes `scene.json`,
/// `points.csv`, `anchors.csv` and `run_report.json` into `out_dir`.
pub fn run_project(config: &PipelineConfig) -> Result<RunOutput, PipelineError> {
    validate(&config.options)?;
    let bytes = std::fs::read(&config.input).map_err(io_err(&config.input))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let kinds = match &config.kinds {
        Some(path) => Some(load_kinds(path).map_err(|e| match e {
            IngestError::Io(source) => PipelineError::Io { path: path.clone(), source },
            other => PipelineError::Ingest(other),
        })?),
        None => None,
    };
    let data = parse_csv(bytes.as_slice(), &config.label_column, kinds.as_ref())?;
    let (scene, report) = project_dataset(&data, &config.options, &config.label_column, Some(&digest))?;

    let dir = &config.out_dir;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let out = RunOutput {
        scene_json: dir.join("scene.json"),
        points_csv: dir.join("points.csv"),
        anchors_csv: dir.join("anchors.csv"),
        report_json: dir.join("run_report.json"),
        scene,
        report,
    };
    let hash = &out.report.config_hash;
    let seed = out.report.seed;
    let report_text = serde_json::to_string_pretty(&out.report).expect("report serializes") + "\n";
    let files = [
        (&out.scene_json, out.scene.to_json()),
        (&out.points_csv, stamp(&out.scene.points_csv(), seed, hash)),
        (&out.anchors_csv, stamp(&out.scene.anchors_csv(), seed, hash)),
        (&out.report_json, report_text),
    ];
    for (path, text) in files {
        std::fs::write(path, text).map_err(io_err(path))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn two_groups() -> Dataset {
        let n = 60;
        let values = DMatrix::from_fn(n, 5, |i, j| {
            let shift = if i % 2 == 0 { 3.0 } else { 0.0 };
            ((i * 7 + j * 13) % 17) as f64 / 17.0 + shift * (j + 1) as f64
        });
        Dataset::from_parts(values, (0..n).map(|i| i % 2 + 1).collect()).unwrap()
    }

    #[test]
    fn two_groups_pad_three() {
        let (scene, report) = project_dataset(&two_groups(), &ProjectOptions::default(), "label", None).unwrap();
        assert_eq!((report.k, report.informative, report.padded), (4, 1, 3));
        assert_eq!(scene.anchor_names, ["MRP1", "MRP2", "MRP3", "MRP4"]);
        assert_eq!(scene.metadata.seed, Some(0));
    }

    #[test]
    fn screening_keeps_informative() {
        let opts = ProjectOptions { screening: Screening::On, ..Default::default() };
        let (_, report) = project_dataset(&two_groups(), &opts, "label", None).unwrap();
        let s = report.screening.unwrap();
        assert!(s.keep_mask.iter().all(|&k| k));
        assert_eq!(s.dropped, 0);
    }

    #[test]
    fn bad_options() {
        let opts = ProjectOptions { fdr_alpha: 1.5, ..Default::default() };
        let err = project_dataset(&two_groups(), &opts, "label", None).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONTRACT);
        assert!(err.to_string().starts_with("config:"));
    }

    #[test]
    fn hash_ignores_nothing_that_matters() {
        let a = ProjectOptions::default();
        let b = ProjectOptions { seed: 1, ..Default::default() };
        assert_ne!(config_hash(&a, None, "label"), config_hash(&b, None, "label"));
        assert_eq!(config_hash(&a, Some("x"), "label"), config_hash(&a, Some("x"), "label"));
        assert_ne!(config_hash(&a, Some("x"), "label"), config_hash(&a, Some("y"), "label"));
    }

    #[test]
    fn missing_input_is_io() {
        let cfg = PipelineConfig {
            input: PathBuf::from("/nonexistent/data.csv"),
            label_column: "label".into(),
            kinds: None,
            options: ProjectOptions::default(),
            out_dir: std::env::temp_dir(),
        };
        assert_eq!(run_project(&cfg).unwrap_err().exit_code(), EXIT_IO);
    }
}
