use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use radviz3d::evalsim::{discretize_deciles, mc_overlap, simulate_mixture, MixtureSpec};
use radviz3d::pipeline::{
    run_project, PipelineConfig, PipelineError, ProjectOptions, Screening, EXIT_CONTRACT, EXIT_IO, EXIT_OK, EXIT_USAGE,
};
use radviz3d::radviz::{anchors_csv, Method};
use radviz3d::{circle_anchors, sphere_anchors};

#[derive(Parser)]
#[command(name = "radviz3d", version, about = "3D radial visualization of labeled tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Radviz3d,
    Radviz2d,
    Viz3d,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScreenArg {
    Auto,
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Sphere,
    Circle,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a labeled CSV and write scene files.
    Project {
        #[arg(long)]
        input: PathBuf,
        /// Name of the label column.
        #[arg(long, default_value = "label")]
        labels: String,
        /// Optional file of `name,kind` lines overriding inferred kinds.
        #[arg(long)]
        kinds: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// False-discovery level for feature screening.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Eigenvalue mass used to choose the number of directions.
        #[arg(long, default_value_t = 0.90)]
        mass: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Radviz3d)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = ScreenArg::Auto)]
        screen: ScreenArg,
        /// Fixed number of directions instead of the mass rule.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print anchor coordinates as CSV.
    Anchors {
        #[arg(long)]
        p: usize,
        #[arg(long, value_enum, default_value_t = SchemeArg::Sphere)]
        scheme: SchemeArg,
    },
    /// Simulate a Gaussian mixture and write it as CSV plus a spec echo.
    Simulate {
        /// Mixture spec JSON. Without it the desk-scale preset is used.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Spread of the preset's component means.
        #[arg(long, default_value_t = 3.0)]
        spread: f64,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Decile-discretize the first N columns (preset default 10, spec default 0).
        #[arg(long)]
        discretize: Option<usize>,
        /// Output CSV; the spec is echoed next to it with a `.spec.json` suffix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the pairwise overlap map of a mixture spec.
    Overlap {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Contract(String),
    Io(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.exit_code() == EXIT_IO {
            Failure::Io(e.to_string())
        } else {
            Failure::Contract(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("io: {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("io: {}: {e}", path.display())))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Project { input, labels, kinds, seed, alpha, mass, method, screen, k, out_dir } => {
            let method = match method {
                MethodArg::Radviz3d => Method::Radviz3d,
                MethodArg::Radviz2d => Method::Radviz2d,
                MethodArg::Viz3d => Method::Viz3d,
            };
            let screening = match screen {
                ScreenArg::Auto => Screening::Auto,
                ScreenArg::On => Screening::On,
                ScreenArg::Off => Screening::Off,
            };
            let config = PipelineConfig {
                input,
                label_column: labels,
                kinds,
                options: ProjectOptions { seed, fdr_alpha: alpha, variance_mass: mass, method, screening, k },
                out_dir,
            };
            let out = run_project(&config)?;
            log::info!(
                "k = {} ({} padded), scene written to {}",
                out.report.k,
                out.report.padded,
                out.scene_json.display()
            );
        }
        Command::Anchors { p, scheme } => {
            let set = match scheme {
                SchemeArg::Sphere => sphere_anchors(p),
                SchemeArg::Circle => circle_anchors(p),
            }
            .map_err(|e| Failure::Contract(format!("anchors: {e}")))?;
            print!("{}", anchors_csv(&set));
        }
        Command::Simulate { spec, spread, n, seed, discretize, out } => {
            let contract = |e: radviz3d::evalsim::EvalError| Failure::Contract(format!("evalsim: {e}"));
            let (spec, default_bins) = match spec {
                Some(path) => (MixtureSpec::from_json(&read(&path)?).map_err(contract)?, 0),
                None => (MixtureSpec::desk_scale(spread, n, seed), 10),
            };
            let mut data = simulate_mixture(&spec).map_err(contract)?;
            let bins = discretize.unwrap_or(default_bins);
            if bins > 0 {
                let cols: Vec<usize> = (0..bins).collect();
                data = discretize_deciles(&data, &cols).map_err(contract)?;
            }
            let mut buf = Vec::new();
            data.write_csv(&mut buf).map_err(|e| Failure::Io(format!("io: {e}")))?;
            write(&out, std::str::from_utf8(&buf).expect("csv is utf-8"))?;
            let mut echo = out.clone().into_os_string();
            echo.push(".spec.json");
            write(Path::new(&echo), &(spec.to_json() + "\n"))?;
        }
        Command::Overlap { spec, samples, out } => {
            let spec = MixtureSpec::from_json(&read(&spec)?).map_err(|e| Failure::Contract(format!("evalsim: {e}")))?;
            let map = mc_overlap(&spec, samples).map_err(|e| Failure::Contract(format!("evalsim: {e}")))?;
            log::info!(
                "generalized overlap {:.6}, max {:.6}, mean {:.6}",
                map.generalized_overlap,
                map.max_overlap,
                map.mean_overlap
            );
            match out {
                Some(path) => write(&path, &map.to_csv())?,
                None => print!("{}", map.to_csv()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(Failure::Contract(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONTRACT as u8)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO as u8)
        }
    }
}
