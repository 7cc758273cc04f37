//! Solver dispatch and experiment execution: one CSV per (seed, solver),
//! a manifest echoing the resolved configuration, and parameter sweeps
//! with summary statistics.

use std::path::{Path, PathBuf};
use std::time::Duration;

use nalgebra::DVector;
use rayon::prelude::*;

use rnewt_core::{
    cg_robust_newton, gen_dataset, ols_fit, robust_gradient, robust_gradient_descent,
    robust_loss_value, robust_newton, IterateRecord, IterateTrace, LabeledDataset, RobustConfig,
    SolverError,
};

use crate::config::{initial_theta, model_for, ExperimentConfig, Solver, SweepGrid};
use crate::trace_io::{write_summary_csv, write_trace_csv};
use crate::CliError;

/// Artifacts of one experiment: the manifest plus one trace per seed.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub manifest: PathBuf,
    pub traces: Vec<PathBuf>,
    /// Final parameter error per seed (NaN when the scenario has no truth).
    pub final_errors: Vec<f64>,
    /// Iterations until the error first dips within 10% of its final value,
    /// per seed.
    pub iters_to_floor: Vec<usize>,
}

fn solver_error(e: SolverError) -> CliError {
    CliError::Solver(e.to_string())
}

/// Runs the configured solver on one dataset and returns its trace.
pub fn run_solver(
    config: &ExperimentConfig,
    dataset: &LabeledDataset,
    run_seed: u64,
) -> Result<IterateTrace, CliError> {
    let model = model_for(&config.scenario);
    let rcfg = config.robust.expect("resolved config");
    let ncfg = config.newton.expect("resolved config");
    let theta0 = initial_theta(config, run_seed);
    match config.solver {
        Solver::Rnm => {
            robust_newton(dataset, &model, &theta0, &rcfg, &ncfg).map_err(solver_error)
        }
        Solver::Nm => robust_newton(dataset, &model, &theta0, &RobustConfig::none(), &ncfg)
            .map_err(solver_error),
        Solver::Rgd => {
            let eta = config.gd_eta.expect("resolved config");
            robust_gradient_descent(dataset, &model, &theta0, &rcfg, eta, ncfg.max_iters)
                .map_err(solver_error)
        }
        Solver::Ncgm => {
            let ccfg = config.cg.expect("resolved config");
            cg_robust_newton(dataset, &model, &theta0, &rcfg, &ccfg).map_err(solver_error)
        }
        Solver::Ols => {
            let fit = ols_fit(dataset).map_err(solver_error)?;
            Ok(single_fit_trace(dataset, fit))
        }
    }
}

/// Wraps a closed-form fit as a one-record trace so every solver persists
/// through the same schema.
fn single_fit_trace(dataset: &LabeledDataset, fit: DVector<f64>) -> IterateTrace {
    let model = rnewt_core::GlmModel::identity();
    let plain = RobustConfig::none();
    let grad_norm = robust_gradient(dataset, &model, &fit, &plain)
        .map(|g| g.value.norm())
        .unwrap_or(f64::NAN);
    let loss = robust_loss_value(dataset, &model, &fit, &plain).unwrap_or(f64::NAN);
    let param_error = dataset
        .truth
        .as_ref()
        .map_or(f64::NAN, |t| (&fit - t).norm());
    IterateTrace {
        records: vec![IterateRecord {
            theta: fit,
            alpha: f64::NAN,
            grad_norm_est: grad_norm,
            decrement_sq: f64::NAN,
            loss_est: loss,
            hessian_repaired: false,
            curvature_breakdown: false,
            linesearch_floor: false,
            param_error,
            elapsed: Duration::ZERO,
        }],
    }
}

/// First iterate whose error is within 10% of the final error.
pub fn iterations_to_floor(trace: &IterateTrace) -> usize {
    let last = trace.final_param_error().unwrap_or(f64::NAN);
    if !last.is_finite() {
        return trace.records.len().saturating_sub(1);
    }
    trace
        .records
        .iter()
        .position(|r| r.param_error <= 1.1 * last)
        .unwrap_or(trace.records.len().saturating_sub(1))
}

/// Generates data and runs the solver for each seed, writing one CSV per
/// seed plus `manifest.json`. Seeds run in parallel; all outputs are
/// deterministic functions of the resolved configuration.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifacts, CliError> {
    let resolved = config.resolve()?;
    std::fs::create_dir_all(&resolved.output_dir)
        .map_err(|e| CliError::io(&resolved.output_dir, e))?;

    let manifest = resolved.output_dir.join("manifest.json");
    let manifest_text = serde_json::to_string_pretty(&resolved)
        .map_err(|e| CliError::config("<manifest>", e.to_string()))?;
    std::fs::write(&manifest, manifest_text).map_err(|e| CliError::io(&manifest, e))?;

    let stem = resolved.stem();
    let runs: Vec<(usize, u64)> = (0..resolved.repeats)
        .map(|i| (i, resolved.scenario.seed.wrapping_add(i as u64)))
        .collect();

    let outcomes: Vec<Result<(PathBuf, f64, usize), CliError>> = runs
        .par_iter()
        .map(|&(_, seed)| {
            let mut spec = resolved.scenario;
            spec.seed = seed;
            let dataset = gen_dataset(&spec).map_err(|e| CliError::Solver(e.to_string()))?;
            let trace = run_solver(&resolved, &dataset, seed)?;
            let final_error = trace.final_param_error().unwrap_or(f64::NAN);
            let start_error = trace
                .records
                .first()
                .map_or(f64::NAN, |r| r.param_error);
            if !final_error.is_finite()
                || (start_error.is_finite() && final_error > 1e3 * start_error.max(1.0))
            {
                log::warn!(
                    "{stem} seed {seed}: run diverged (start error {start_error:.3e}, final {final_error:.3e})"
                );
            }
            let path = resolved.output_dir.join(format!("{stem}_seed{seed}.csv"));
            write_trace_csv(&trace, &path, resolved.record_timing)?;
            log::info!(
                "{stem} seed {seed}: {} iterates, final error {final_error:.4e}",
                trace.records.len()
            );
            Ok((path, final_error, iterations_to_floor(&trace)))
        })
        .collect();

    let mut traces = Vec::with_capacity(outcomes.len());
    let mut final_errors = Vec::with_capacity(outcomes.len());
    let mut iters_to_floor = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        let (path, err, floor) = outcome?;
        traces.push(path);
        final_errors.push(err);
        iters_to_floor.push(floor);
    }

    Ok(RunArtifacts {
        manifest,
        traces,
        final_errors,
        iters_to_floor,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[sorted.len() / 2]
}

fn median_usize(values: &[usize]) -> usize {
    let mut sorted: Vec<usize> = values.to_vec();
    sorted.sort_unstable();
    sorted[sorted.len() / 2]
}

/// One row of a sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub median_final_error: f64,
    pub median_iters_to_floor: usize,
}

pub const SWEEP_HEADER: &str = "param,value,median_final_error,median_iters_to_floor";

/// Runs the base experiment at every grid value, each into its own
/// subdirectory, and writes `sweep_summary.csv` with per-point medians.
pub fn sweep(
    base: &ExperimentConfig,
    grid: &SweepGrid,
) -> Result<(PathBuf, Vec<SweepRow>), CliError> {
    grid.validate()?;
    let resolved = base.resolve()?;
    std::fs::create_dir_all(&resolved.output_dir)
        .map_err(|e| CliError::io(&resolved.output_dir, e))?;

    let mut rows = Vec::with_capacity(grid.values.len());
    for &value in &grid.values {
        let mut derived = grid.apply(&resolved, value)?;
        derived.output_dir = resolved.output_dir.join(format!("sweep_{}", grid.slug(value)));
        let artifacts = run_experiment(&derived)?;
        rows.push(SweepRow {
            param: grid.param_name().to_string(),
            value,
            median_final_error: median(&artifacts.final_errors),
            median_iters_to_floor: median_usize(&artifacts.iters_to_floor),
        });
    }

    let path = resolved.output_dir.join("sweep_summary.csv");
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{}",
                r.param, r.value, r.median_final_error, r.median_iters_to_floor
            )
        })
        .collect();
    write_summary_csv(SWEEP_HEADER, &lines, &path)?;
    Ok((path, rows))
}

/// Writes the generated dataset for a scenario as CSV.
pub fn generate_dataset_csv(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let dataset =
        gen_dataset(&config.scenario).map_err(|e| CliError::config("scenario", e.to_string()))?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    let mut buf = Vec::new();
    rnewt_core::datagen::write_dataset_csv(&dataset, &mut buf).map_err(|e| CliError::io(out, e))?;
    std::fs::write(out, buf).map_err(|e| CliError::io(out, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rnewt_core::{Scenario, ScenarioSpec};

    fn config(dir: &Path, solver: Solver, repeats: usize) -> ExperimentConfig {
        ExperimentConfig {
            scenario: ScenarioSpec {
                scenario: Scenario::LinearHuber,
                p: 4,
                n: 200,
                epsilon: 0.1,
                sigma: 1.0,
                beta: 1.0,
                seed: 3,
            },
            solver,
            robust: None,
            newton: None,
            cg: None,
            gd_eta: None,
            output_dir: dir.to_path_buf(),
            repeats,
            theta0: None,
            record_timing: false,
        }
    }

    #[test]
    fn repeats_produce_one_csv_each_plus_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), Solver::Rnm, 3);
        let artifacts = run_experiment(&cfg).unwrap();
        assert_eq!(artifacts.traces.len(), 3);
        assert!(artifacts.manifest.exists());
        for t in &artifacts.traces {
            assert!(t.exists());
        }
        let entries = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(entries, 4);
    }

    #[test]
    fn ols_writes_single_row() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), Solver::Ols, 1);
        let artifacts = run_experiment(&cfg).unwrap();
        let rows = crate::trace_io::read_trace_csv(&artifacts.traces[0]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].param_error.is_finite());
    }

    #[test]
    fn sweep_of_size_one_matches_run_experiment() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), Solver::Rnm, 2);
        let grid = SweepGrid {
            param: crate::config::SweepParam::Epsilon,
            values: vec![0.1],
        };
        let (summary, rows) = sweep(&cfg, &grid).unwrap();
        assert!(summary.exists());
        assert_eq!(rows.len(), 1);

        let solo_dir = tempfile::tempdir().unwrap();
        let solo = config(solo_dir.path(), Solver::Rnm, 2);
        let artifacts = run_experiment(&solo).unwrap();
        let expect = {
            let mut v = artifacts.final_errors.clone();
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        assert_eq!(rows[0].median_final_error, expect);
    }

    #[test]
    fn manifest_rerun_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), Solver::Rnm, 2);
        let artifacts = run_experiment(&cfg).unwrap();
        let originals: Vec<Vec<u8>> = artifacts
            .traces
            .iter()
            .map(|p| std::fs::read(p).unwrap())
            .collect();

        let manifest = ExperimentConfig::from_json_file(&artifacts.manifest).unwrap();
        let rerun_dir = tempfile::tempdir().unwrap();
        let rerun_cfg = ExperimentConfig {
            output_dir: rerun_dir.path().to_path_buf(),
            ..manifest
        };
        let rerun = run_experiment(&rerun_cfg).unwrap();
        for (orig, new_path) in originals.iter().zip(&rerun.traces) {
            assert_eq!(orig, &std::fs::read(new_path).unwrap());
        }
    }
}
