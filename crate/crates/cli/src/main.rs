use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rnewt_cli::config::{ExperimentConfig, Solver, SweepGrid, SweepParam};
use rnewt_cli::plot::{emit_plot, PlotSpec};
use rnewt_cli::runner::{generate_dataset_csv, run_experiment, sweep};
use rnewt_cli::CliError;
use rnewt_core::{Scenario, ScenarioSpec};

/// Robust Newton experiment harness.
///
/// Runs robust second-order solvers on synthetic contaminated datasets,
/// persists per-iteration traces as CSV, and renders convergence plots as
/// standalone SVG. Log verbosity comes from the RNEWT_LOG environment
/// variable (error, warn, info, debug).
#[derive(Parser)]
#[command(name = "rnewt", version, about)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    /// Number of worker threads for repeats and sweep grid points.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// JSON experiment config; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Scenario when no config file is given.
    #[arg(long, global = true, value_enum)]
    scenario: Option<ScenarioArg>,

    /// Solver to run.
    #[arg(long, global = true, value_enum)]
    solver: Option<Solver>,

    /// Base seed (first repeat; later repeats increment it).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Contamination fraction override.
    #[arg(long, global = true)]
    epsilon: Option<f64>,

    /// Output directory override.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ScenarioArg {
    LinearHuber,
    LogisticFlip,
    LinearPareto,
}

impl From<ScenarioArg> for Scenario {
    fn from(value: ScenarioArg) -> Scenario {
        match value {
            ScenarioArg::LinearHuber => Scenario::LinearHuber,
            ScenarioArg::LogisticFlip => Scenario::LogisticFlip,
            ScenarioArg::LinearPareto => Scenario::LinearPareto,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the scenario dataset and write it as CSV.
    Gen {
        /// Output file; defaults to <output-dir>/dataset.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one experiment (all repeats) and write traces plus manifest.
    Fit,
    /// Run the experiment across a parameter grid and summarize.
    Sweep {
        /// Which scenario parameter the grid varies.
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Render trace CSVs as an SVG convergence chart.
    Plot {
        /// Trace CSV files (one series each).
        #[arg(long, value_delimiter = ',', required = true)]
        inputs: Vec<PathBuf>,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
        /// Chart title.
        #[arg(long, default_value = "convergence")]
        title: String,
    },
}

fn build_config(overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut config = match &overrides.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => {
            let scenario = overrides.scenario.ok_or_else(|| {
                CliError::config("scenario", "required when no --config file is given")
            })?;
            ExperimentConfig {
                scenario: ScenarioSpec {
                    scenario: scenario.into(),
                    p: 10,
                    n: 1000,
                    epsilon: 0.1,
                    sigma: 1.0,
                    beta: 1.0,
                    seed: 0,
                },
                solver: overrides.solver.unwrap_or(Solver::Rnm),
                robust: None,
                newton: None,
                cg: None,
                gd_eta: None,
                output_dir: PathBuf::from("runs"),
                repeats: 1,
                theta0: None,
                record_timing: false,
            }
        }
    };
    if let Some(scenario) = overrides.scenario {
        config.scenario.scenario = scenario.into();
    }
    if let Some(solver) = overrides.solver {
        config.solver = solver;
    }
    if let Some(seed) = overrides.seed {
        config.scenario.seed = seed;
    }
    if let Some(epsilon) = overrides.epsilon {
        config.scenario.epsilon = epsilon;
        config.robust = None; // re-derive the estimator for the new level
    }
    if let Some(dir) = &overrides.output_dir {
        config.output_dir = dir.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::config("jobs", e.to_string()))?;
    }
    match cli.command {
        Command::Gen { out } => {
            let config = build_config(&cli.overrides)?;
            config.validate()?;
            let out = out.unwrap_or_else(|| config.output_dir.join("dataset.csv"));
            generate_dataset_csv(&config, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Fit => {
            let config = build_config(&cli.overrides)?;
            let artifacts = run_experiment(&config)?;
            println!("manifest: {}", artifacts.manifest.display());
            for (path, err) in artifacts.traces.iter().zip(&artifacts.final_errors) {
                println!("{}  final_error={err:.6e}", path.display());
            }
            Ok(())
        }
        Command::Sweep { param, values } => {
            let config = build_config(&cli.overrides)?;
            let grid = SweepGrid { param, values };
            let (summary, rows) = sweep(&config, &grid)?;
            for row in &rows {
                println!(
                    "{}={}  median_final_error={:.6e}  median_iters_to_floor={}",
                    row.param, row.value, row.median_final_error, row.median_iters_to_floor
                );
            }
            println!("summary: {}", summary.display());
            Ok(())
        }
        Command::Plot { inputs, out, title } => {
            let spec = PlotSpec { title, output: out };
            let path = emit_plot(&inputs, &spec)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RNEWT_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
