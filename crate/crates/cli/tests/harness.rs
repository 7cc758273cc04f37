//! End-to-end harness checks: the figure pipeline (runs → traces → SVG) and
//! the binary's contract (subcommands, exit codes).

use std::path::PathBuf;
use std::process::Command;

use rnewt_cli::config::{ExperimentConfig, Solver};
use rnewt_cli::plot::{emit_plot, validate_svg, PlotSpec};
use rnewt_cli::runner::run_experiment;
use rnewt_cli::trace_io::read_trace_csv;
use rnewt_core::{Scenario, ScenarioSpec};

fn config(dir: &std::path::Path, solver: Solver, epsilon: f64, repeats: usize) -> ExperimentConfig {
    ExperimentConfig {
        scenario: ScenarioSpec {
            scenario: Scenario::LinearHuber,
            p: 6,
            n: 300,
            epsilon,
            sigma: 1.0,
            beta: 1.0,
            seed: 1,
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
fn figure_style_pipeline_produces_three_series_and_valid_svg() {
    let dir = tempfile::tempdir().unwrap();
    let mut traces: Vec<PathBuf> = Vec::new();
    for eps in [0.05, 0.1, 0.2] {
        let sub = dir.path().join(format!("eps{eps}"));
        let artifacts = run_experiment(&config(&sub, Solver::Rnm, eps, 1)).unwrap();
        traces.extend(artifacts.traces);
    }
    assert_eq!(traces.len(), 3);

    let out = dir.path().join("figure.svg");
    emit_plot(
        &traces,
        &PlotSpec {
            title: "parameter error by contamination level".into(),
            output: out.clone(),
        },
    )
    .unwrap();
    validate_svg(&out).unwrap();
    let svg = std::fs::read_to_string(&out).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
    // legend keeps the grid order, which is ascending in epsilon
    let i05 = svg.find("eps0.05").unwrap();
    let i10 = svg.find("eps0.1_").unwrap();
    let i20 = svg.find("eps0.2_").unwrap();
    assert!(i05 < i10 && i10 < i20);
}

#[test]
fn robust_newton_run_ends_below_ols_reference() {
    let dir = tempfile::tempdir().unwrap();
    let rnm = run_experiment(&config(&dir.path().join("rnm"), Solver::Rnm, 0.1, 3)).unwrap();
    let ols = run_experiment(&config(&dir.path().join("ols"), Solver::Ols, 0.1, 3)).unwrap();
    assert_eq!(rnm.traces.len(), 3);
    // one CSV per seed plus the manifest
    let entries = std::fs::read_dir(dir.path().join("rnm")).unwrap().count();
    assert_eq!(entries, 4);
    for (r, o) in rnm.final_errors.iter().zip(&ols.final_errors) {
        assert!(r < o, "robust Newton {r} should end below OLS {o}");
    }
    let rows = read_trace_csv(&rnm.traces[0]).unwrap();
    assert!(rows.len() > 1);
    assert_eq!(rows.last().unwrap().iter, rows.len() - 1);
}

fn rnewt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rnewt"))
}

#[test]
fn binary_gen_fit_plot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("runs");

    let status = rnewt()
        .args(["gen", "--scenario", "linear-huber", "--seed", "3"])
        .args(["--output-dir", out_dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let dataset = std::fs::read_to_string(out_dir.join("dataset.csv")).unwrap();
    assert!(dataset.starts_with("x_1,"));

    let status = rnewt()
        .args(["fit", "--scenario", "linear-huber", "--solver", "rnm", "--seed", "3"])
        .args(["--epsilon", "0.1"])
        .args(["--output-dir", out_dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let trace = out_dir.join("rnm_linear_huber_eps0.1_seed3.csv");
    assert!(trace.exists());
    assert!(out_dir.join("manifest.json").exists());

    let svg = out_dir.join("fig.svg");
    let status = rnewt()
        .args(["plot", "--inputs", trace.to_str().unwrap()])
        .args(["--out", svg.to_str().unwrap(), "--title", "smoke"])
        .status()
        .unwrap();
    assert!(status.success());
    validate_svg(&svg).unwrap();
}

#[test]
fn binary_exit_codes_distinguish_config_and_runtime_errors() {
    // missing scenario: configuration error -> 1
    let status = rnewt().arg("fit").status().unwrap();
    assert_eq!(status.code(), Some(1));

    // unreadable input: runtime error -> 2
    let status = rnewt()
        .args(["plot", "--inputs", "/nonexistent/trace.csv", "--out", "/tmp/x.svg"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn binary_sweep_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let status = rnewt()
        .args(["sweep", "--scenario", "linear-huber", "--solver", "rnm", "--seed", "5"])
        .args(["--output-dir", out_dir.to_str().unwrap()])
        .args(["--param", "epsilon", "--values", "0.05,0.1"])
        .status()
        .unwrap();
    assert!(status.success());
    let summary = std::fs::read_to_string(out_dir.join("sweep_summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "param,value,median_final_error,median_iters_to_floor");
    assert_eq!(lines.len(), 3);
}
