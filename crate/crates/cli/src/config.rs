//! Experiment configuration: JSON ingestion, scenario-derived defaults, and
//! the resolved manifest that makes every run reproducible.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use rnewt_core::{
    CgConfig, Contamination, HuberConfig, MomConfig, NewtonConfig, RobustConfig, Scenario,
    ScenarioSpec,
};

use crate::CliError;

/// Which optimizer a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Robust Newton's method.
    Rnm,
    /// Robust gradient descent.
    Rgd,
    /// Conjugate-gradient (Hessian-free) robust Newton.
    Ncgm,
    /// Ordinary least squares (single closed-form fit).
    Ols,
    /// Plain Newton: the same loop as RNM with robustification off.
    Nm,
}

impl Solver {
    pub fn slug(self) -> &'static str {
        match self {
            Solver::Rnm => "rnm",
            Solver::Rgd => "rgd",
            Solver::Ncgm => "ncgm",
            Solver::Ols => "ols",
            Solver::Nm => "nm",
        }
    }
}

fn default_repeats() -> usize {
    1
}

/// A single experiment: one scenario, one solver, `repeats` seeds.
///
/// Optional fields fall back to scenario-specific defaults at resolution;
/// the resolved form is what runs and what the manifest records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub solver: Solver,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robust: Option<RobustConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton: Option<NewtonConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cg: Option<CgConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gd_eta: Option<f64>,
    pub output_dir: PathBuf,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Explicit initial parameter; scenario-and-seed-derived when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    /// Write measured per-iteration wall time into the CSVs. Off by
    /// default so a manifest re-run reproduces files bit for bit.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config("<config file>", format!("{e} in {}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario
            .validate()
            .map_err(|e| CliError::config("scenario", e.to_string()))?;
        if self.repeats < 1 {
            return Err(CliError::config("repeats", "must be at least 1"));
        }
        if let Some(theta0) = &self.theta0 {
            if theta0.len() != self.scenario.p {
                return Err(CliError::config(
                    "theta0",
                    format!(
                        "length {} does not match scenario dimension {}",
                        theta0.len(),
                        self.scenario.p
                    ),
                ));
            }
        }
        if self.solver == Solver::Rgd {
            if let Some(eta) = self.gd_eta {
                if !(eta >= 0.0 && eta.is_finite()) {
                    return Err(CliError::config("gd_eta", "must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }

    /// Fills every optional field with its scenario default, yielding the
    /// manifest form.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        self.validate()?;
        let mut resolved = self.clone();
        resolved.robust = Some(self.robust.unwrap_or_else(|| default_robust(&self.scenario)));
        resolved.newton = Some(
            self.newton
                .unwrap_or_else(|| default_newton(&self.scenario, self.solver)),
        );
        if self.solver == Solver::Ncgm {
            resolved.cg = Some(self.cg.unwrap_or_else(|| {
                default_cg(&self.scenario, resolved.newton.expect("newton resolved"))
            }));
        }
        if self.solver == Solver::Rgd {
            resolved.gd_eta = Some(self.gd_eta.unwrap_or_else(|| default_gd_eta(&self.scenario)));
        }
        if let Some(cfg) = &resolved.robust {
            cfg.validate()
                .map_err(|e| CliError::config("robust", e.to_string()))?;
        }
        if let Some(cfg) = &resolved.newton {
            cfg.validate()
                .map_err(|e| CliError::config("newton", e.to_string()))?;
        }
        if let Some(cfg) = &resolved.cg {
            cfg.validate()
                .map_err(|e| CliError::config("cg", e.to_string()))?;
        }
        Ok(resolved)
    }

    /// Compact file-stem describing scenario and solver, e.g.
    /// `rnm_linear_huber_eps0.1`.
    pub fn stem(&self) -> String {
        let scenario = match self.scenario.scenario {
            Scenario::LinearHuber => format!("linear_huber_eps{}", self.scenario.epsilon),
            Scenario::LogisticFlip => format!("logistic_flip_eps{}", self.scenario.epsilon),
            Scenario::LinearPareto => format!(
                "linear_pareto_sigma{}_beta{}",
                self.scenario.sigma, self.scenario.beta
            ),
        };
        format!("{}_{}", self.solver.slug(), scenario)
    }
}

/// Default failure probability handed to the robust estimators.
pub const DEFAULT_ESTIMATOR_DELTA: f64 = 0.1;

fn default_robust(scenario: &ScenarioSpec) -> RobustConfig {
    match scenario.scenario {
        Scenario::LinearHuber | Scenario::LogisticFlip => RobustConfig::huber(HuberConfig::new(
            scenario.epsilon,
            DEFAULT_ESTIMATOR_DELTA,
        )),
        Scenario::LinearPareto => {
            RobustConfig::heavy_tail(MomConfig::new(DEFAULT_ESTIMATOR_DELTA))
        }
    }
}

fn default_newton(scenario: &ScenarioSpec, solver: Solver) -> NewtonConfig {
    let mut cfg = match scenario.scenario {
        Scenario::LinearHuber | Scenario::LogisticFlip => NewtonConfig::new(15),
        Scenario::LinearPareto => NewtonConfig {
            zeta: 1000.0,
            ..NewtonConfig::new(15)
        },
    };
    if solver == Solver::Rgd {
        // first-order runs need a longer horizon to flatten out
        cfg.max_iters = match scenario.scenario {
            Scenario::LinearHuber => 150,
            Scenario::LogisticFlip => 50,
            Scenario::LinearPareto => 150,
        };
    }
    cfg
}

fn default_cg(scenario: &ScenarioSpec, newton: NewtonConfig) -> CgConfig {
    let (zeta, fd_delta) = match scenario.scenario {
        Scenario::LinearHuber => (1e-3, 1e-9),
        Scenario::LogisticFlip => (newton.zeta, 1e-9),
        Scenario::LinearPareto => (1e-5, 1e-10),
    };
    CgConfig {
        fd_delta,
        ..CgConfig::new(NewtonConfig { zeta, ..newton })
    }
}

fn default_gd_eta(scenario: &ScenarioSpec) -> f64 {
    match scenario.scenario {
        Scenario::LinearHuber => 0.1,
        Scenario::LogisticFlip => 3.0,
        Scenario::LinearPareto => 0.1,
    }
}

const THETA0_SALT: u64 = 0x517c_c1b7_2722_0a95;

/// Initial parameter for a run: the explicit override when present,
/// otherwise the scenario's convention (seeded where randomized).
pub fn initial_theta(config: &ExperimentConfig, run_seed: u64) -> DVector<f64> {
    if let Some(theta0) = &config.theta0 {
        return DVector::from_vec(theta0.clone());
    }
    let p = config.scenario.p;
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed ^ THETA0_SALT);
    let mut noise = |scale: f64| {
        DVector::from_fn(p, |_, _| {
            let w: f64 = StandardNormal.sample(&mut rng);
            w * scale
        })
    };
    match (config.scenario.scenario, config.solver) {
        (Scenario::LinearHuber, Solver::Ncgm) => DVector::from_element(p, 1.0) + noise(2.0),
        (Scenario::LinearHuber, _) => DVector::from_element(p, 0.4) + noise(10.0),
        (Scenario::LogisticFlip, _) => DVector::zeros(p),
        (Scenario::LinearPareto, Solver::Ncgm) => DVector::from_element(p, 1.5) + noise(2.0),
        (Scenario::LinearPareto, _) => DVector::from_element(p, 10.0),
    }
}

/// Scenario dispatch for the GLM family.
pub fn model_for(scenario: &ScenarioSpec) -> rnewt_core::GlmModel {
    match scenario.scenario {
        Scenario::LogisticFlip => rnewt_core::GlmModel::logistic(),
        _ => rnewt_core::GlmModel::identity(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Epsilon,
    N,
    Sigma,
    /// Finite-difference increment of the conjugate-gradient solver
    /// (NCGM only).
    FdDelta,
}

/// A one-dimensional parameter grid applied on top of a base experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepGrid {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::config("sweep.values", "grid must be non-empty"));
        }
        Ok(())
    }

    /// Applies one grid value to a copy of the base config. Estimator
    /// defaults re-derive from the updated scenario unless explicitly set.
    pub fn apply(&self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig, CliError> {
        let mut derived = base.clone();
        match self.param {
            SweepParam::Epsilon => {
                derived.scenario.epsilon = value;
                // keep a Huber estimator's contamination level in step with
                // the scenario unless the user pinned one explicitly
                if let Some(cfg) = &mut derived.robust {
                    if let Contamination::Huber(h) = &mut cfg.contamination {
                        h.epsilon = value;
                    }
                }
            }
            SweepParam::N => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(CliError::config(
                        "sweep.values",
                        format!("n grid values must be positive integers, got {value}"),
                    ));
                }
                derived.scenario.n = value as usize;
            }
            SweepParam::Sigma => derived.scenario.sigma = value,
            SweepParam::FdDelta => {
                if base.solver != Solver::Ncgm {
                    return Err(CliError::config(
                        "sweep.param",
                        "fd_delta sweeps apply only to the ncgm solver",
                    ));
                }
                let mut cg = base
                    .cg
                    .ok_or_else(|| CliError::config("cg", "resolve the config before sweeping"))?;
                cg.fd_delta = value;
                derived.cg = Some(cg);
            }
        }
        Ok(derived)
    }

    pub fn param_name(&self) -> &'static str {
        match self.param {
            SweepParam::Epsilon => "epsilon",
            SweepParam::N => "n",
            SweepParam::Sigma => "sigma",
            SweepParam::FdDelta => "fd_delta",
        }
    }

    pub fn slug(&self, value: f64) -> String {
        format!("{}_{value}", self.param_name())
    }
}
