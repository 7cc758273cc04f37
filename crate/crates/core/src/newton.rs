//! Robust Newton's method with robust backtracking linesearch, the
//! first-order robust gradient descent baseline, and the OLS oracle.

use std::time::{Duration, Instant};

use nalgebra::{Cholesky, DVector};
use thiserror::Error;

use crate::models::{validate_glm_inputs, GlmModel, LabeledDataset};
use crate::robust_derivatives::{
    robust_gradient, robust_hessian, robust_loss_value, RobustConfig, RobustError, RobustHessian,
};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Robust(#[from] RobustError),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("Hessian solve failed despite eigenvalue repair")]
    SolveFailure { partial: IterateTrace },
    #[error("design matrix is singular")]
    SingularDesign,
}

/// Parameters of the Newton outer loop and its backtracking linesearch.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NewtonConfig {
    /// Maximum outer iterations T.
    pub max_iters: usize,
    /// Armijo slope fraction, in (0, 0.5).
    pub kappa1: f64,
    /// Stepsize shrink factor, in (0, 1).
    pub kappa2: f64,
    /// Extra linesearch tolerance absorbing robust-estimate noise.
    pub zeta: f64,
    /// Smallest admissible stepsize before the linesearch gives up.
    pub min_alpha: f64,
    /// Early-stop threshold on the estimated gradient norm. Zero (the
    /// default) runs all iterations.
    pub grad_tol: f64,
}

impl NewtonConfig {
    pub fn new(max_iters: usize) -> Self {
        NewtonConfig {
            max_iters,
            kappa1: 0.01,
            kappa2: 0.5,
            zeta: 1e-8,
            min_alpha: 1e-12,
            grad_tol: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.max_iters == 0 {
            return Err(SolverError::InvalidConfig("max_iters must be positive".into()));
        }
        if !(self.kappa1 > 0.0 && self.kappa1 < 0.5) {
            return Err(SolverError::InvalidConfig(format!(
                "kappa1 must lie in (0, 0.5), got {}",
                self.kappa1
            )));
        }
        if !(self.kappa2 > 0.0 && self.kappa2 < 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "kappa2 must lie in (0, 1), got {}",
                self.kappa2
            )));
        }
        if !(self.zeta >= 0.0) {
            return Err(SolverError::InvalidConfig("zeta must be nonnegative".into()));
        }
        if !(self.min_alpha > 0.0) {
            return Err(SolverError::InvalidConfig("min_alpha must be positive".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(SolverError::InvalidConfig("grad_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One row of an optimizer trace: the iterate θ_t, the measurements taken at
/// it, and the stepsize that left it. The stepsize (and, for Newton, the
/// decrement) of the final record is NaN since no step follows it; NaN also
/// marks fields a solver does not compute (e.g. decrement for gradient
/// descent, param_error without ground truth).
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub theta: DVector<f64>,
    pub alpha: f64,
    pub grad_norm_est: f64,
    pub decrement_sq: f64,
    pub loss_est: f64,
    pub hessian_repaired: bool,
    pub curvature_breakdown: bool,
    pub linesearch_floor: bool,
    pub param_error: f64,
    pub elapsed: Duration,
}

/// Full per-iterate history of a solver run. Record 0 is the initialization.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterateTrace {
    pub records: Vec<IterateRecord>,
}

impl IterateTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_theta(&self) -> Option<&DVector<f64>> {
        self.records.last().map(|r| &r.theta)
    }

    pub fn final_param_error(&self) -> Option<f64> {
        self.records.last().map(|r| r.param_error)
    }
}

fn param_error(theta: &DVector<f64>, truth: Option<&DVector<f64>>) -> f64 {
    truth.map_or(f64::NAN, |t| (theta - t).norm())
}

/// Linesearch outcome: the accepted stepsize and whether the floor was hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinesearchResult {
    pub alpha: f64,
    pub hit_floor: bool,
}

fn linesearch_from_loss(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
    direction: &DVector<f64>,
    g_theta: &DVector<f64>,
    loss_theta: f64,
    rcfg: &RobustConfig,
    ncfg: &NewtonConfig,
) -> Result<LinesearchResult, RobustError> {
    let slope = g_theta.dot(direction);
    let mut alpha = 1.0f64;
    loop {
        let trial = theta + direction * alpha;
        let trial_loss = robust_loss_value(dataset, model, &trial, rcfg)?;
        if trial_loss <= loss_theta + ncfg.kappa1 * alpha * slope + ncfg.zeta {
            return Ok(LinesearchResult {
                alpha,
                hit_floor: false,
            });
        }
        let next = alpha * ncfg.kappa2;
        if next < ncfg.min_alpha {
            return Ok(LinesearchResult {
                alpha: ncfg.min_alpha,
                hit_floor: true,
            });
        }
        alpha = next;
    }
}

/// Robust backtracking linesearch along `direction` from `theta`.
///
/// Starts at α = 1 and shrinks by κ₂ until the robust loss estimate at the
/// trial point satisfies the Armijo-style condition
/// `loss(θ + αΔ) ≤ loss(θ) + κ₁·α·g(θ)ᵀΔ + ζ`. The robust loss at `theta`
/// is estimated once and reused; each trial point gets a fresh estimate.
pub fn backtracking_linesearch(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
    direction: &DVector<f64>,
    g_theta: &DVector<f64>,
    rcfg: &RobustConfig,
    ncfg: &NewtonConfig,
) -> Result<LinesearchResult, SolverError> {
    ncfg.validate()?;
    rcfg.validate().map_err(RobustError::from)?;
    assert!(
        direction.iter().all(|v| v.is_finite()),
        "search direction must be finite"
    );
    let loss_theta = robust_loss_value(dataset, model, theta, rcfg)?;
    linesearch_from_loss(dataset, model, theta, direction, g_theta, loss_theta, rcfg, ncfg)
        .map_err(Into::into)
}

/// Noisy Newton decrement sqrt(gᵀ H⁻¹ g) for a repaired Hessian.
pub fn newton_decrement(g: &DVector<f64>, hessian: &RobustHessian) -> Result<f64, SolverError> {
    let chol = Cholesky::new(hessian.matrix.clone()).ok_or(SolverError::SolveFailure {
        partial: IterateTrace::default(),
    })?;
    Ok(g.dot(&chol.solve(g)).max(0.0).sqrt())
}

struct NewtonStep {
    grad_norm: f64,
    loss: f64,
    decrement_sq: f64,
    direction: DVector<f64>,
    repaired: bool,
}

fn measure_newton_step(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
    rcfg: &RobustConfig,
) -> Result<Option<NewtonStep>, RobustError> {
    let g = robust_gradient(dataset, model, theta, rcfg)?.value;
    let loss = robust_loss_value(dataset, model, theta, rcfg)?;
    let hessian = robust_hessian(dataset, model, theta, rcfg)?;
    let chol = match Cholesky::new(hessian.matrix.clone()) {
        Some(c) => c,
        None => return Ok(None),
    };
    let direction = chol.solve(&(-&g));
    let decrement_sq = (-g.dot(&direction)).max(0.0);
    Ok(Some(NewtonStep {
        grad_norm: g.norm(),
        loss,
        decrement_sq,
        direction,
        repaired: hessian.repaired,
    }))
}

/// Robust Newton's method.
///
/// Each iteration estimates the gradient and Hessian robustly, solves the
/// repaired symmetric system H·Δθ = −g directly, picks a stepsize with the
/// robust backtracking linesearch, and records the full iterate history.
/// Stops early once the estimated gradient norm falls to `grad_tol`. A
/// numerically singular Hessian (possible when the repair floor is zero)
/// aborts with the partial trace inside the error.
pub fn robust_newton(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta0: &DVector<f64>,
    rcfg: &RobustConfig,
    ncfg: &NewtonConfig,
) -> Result<IterateTrace, SolverError> {
    ncfg.validate()?;
    rcfg.validate().map_err(RobustError::from)?;
    validate_glm_inputs(dataset, model, theta0).map_err(RobustError::from)?;

    let truth = dataset.truth.clone();
    let mut records = Vec::with_capacity(ncfg.max_iters + 1);
    let mut theta = theta0.clone();

    for _ in 0..ncfg.max_iters {
        let started = Instant::now();
        let step = match measure_newton_step(dataset, model, &theta, rcfg)? {
            Some(step) => step,
            None => {
                records.push(IterateRecord {
                    theta: theta.clone(),
                    alpha: f64::NAN,
                    grad_norm_est: f64::NAN,
                    decrement_sq: f64::NAN,
                    loss_est: f64::NAN,
                    hessian_repaired: true,
                    curvature_breakdown: false,
                    linesearch_floor: false,
                    param_error: param_error(&theta, truth.as_ref()),
                    elapsed: started.elapsed(),
                });
                return Err(SolverError::SolveFailure {
                    partial: IterateTrace { records },
                });
            }
        };

        if step.grad_norm <= ncfg.grad_tol {
            records.push(IterateRecord {
                theta: theta.clone(),
                alpha: f64::NAN,
                grad_norm_est: step.grad_norm,
                decrement_sq: step.decrement_sq,
                loss_est: step.loss,
                hessian_repaired: step.repaired,
                curvature_breakdown: false,
                linesearch_floor: false,
                param_error: param_error(&theta, truth.as_ref()),
                elapsed: started.elapsed(),
            });
            return Ok(IterateTrace { records });
        }

        let g = robust_gradient(dataset, model, &theta, rcfg)?.value;
        let ls = linesearch_from_loss(
            dataset,
            model,
            &theta,
            &step.direction,
            &g,
            step.loss,
            rcfg,
            ncfg,
        )?;
        let next = &theta + &step.direction * ls.alpha;
        records.push(IterateRecord {
            theta: theta.clone(),
            alpha: ls.alpha,
            grad_norm_est: step.grad_norm,
            decrement_sq: step.decrement_sq,
            loss_est: step.loss,
            hessian_repaired: step.repaired,
            curvature_breakdown: false,
            linesearch_floor: ls.hit_floor,
            param_error: param_error(&theta, truth.as_ref()),
            elapsed: started.elapsed(),
        });
        theta = next;
    }

    // closing record for θ_T
    let started = Instant::now();
    match measure_newton_step(dataset, model, &theta, rcfg)? {
        Some(step) => records.push(IterateRecord {
            theta: theta.clone(),
            alpha: f64::NAN,
            grad_norm_est: step.grad_norm,
            decrement_sq: step.decrement_sq,
            loss_est: step.loss,
            hessian_repaired: step.repaired,
            curvature_breakdown: false,
            linesearch_floor: false,
            param_error: param_error(&theta, truth.as_ref()),
            elapsed: started.elapsed(),
        }),
        None => {
            return Err(SolverError::SolveFailure {
                partial: IterateTrace { records },
            })
        }
    }
    Ok(IterateTrace { records })
}

/// First-order baseline: θ_{t+1} = θ_t − η·g(θ_t) with the same robust
/// gradient estimates. The recorded stepsize is the constant η; the Newton
/// decrement column is left NaN.
pub fn robust_gradient_descent(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta0: &DVector<f64>,
    rcfg: &RobustConfig,
    eta: f64,
    max_iters: usize,
) -> Result<IterateTrace, SolverError> {
    rcfg.validate().map_err(RobustError::from)?;
    validate_glm_inputs(dataset, model, theta0).map_err(RobustError::from)?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(SolverError::InvalidConfig(format!(
            "stepsize must be finite and nonnegative, got {eta}"
        )));
    }

    let truth = dataset.truth.clone();
    let mut records = Vec::with_capacity(max_iters + 1);
    let mut theta = theta0.clone();

    for _ in 0..max_iters {
        let started = Instant::now();
        let g = robust_gradient(dataset, model, &theta, rcfg)?.value;
        let loss = robust_loss_value(dataset, model, &theta, rcfg)?;
        let next = &theta - &g * eta;
        records.push(IterateRecord {
            theta: theta.clone(),
            alpha: eta,
            grad_norm_est: g.norm(),
            decrement_sq: f64::NAN,
            loss_est: loss,
            hessian_repaired: false,
            curvature_breakdown: false,
            linesearch_floor: false,
            param_error: param_error(&theta, truth.as_ref()),
            elapsed: started.elapsed(),
        });
        theta = next;
    }

    let started = Instant::now();
    let g = robust_gradient(dataset, model, &theta, rcfg)?.value;
    let loss = robust_loss_value(dataset, model, &theta, rcfg)?;
    records.push(IterateRecord {
        theta: theta.clone(),
        alpha: f64::NAN,
        grad_norm_est: g.norm(),
        decrement_sq: f64::NAN,
        loss_est: loss,
        hessian_repaired: false,
        curvature_breakdown: false,
        linesearch_floor: false,
        param_error: param_error(&theta, truth.as_ref()),
        elapsed: started.elapsed(),
    });
    Ok(IterateTrace { records })
}

/// Exact normal-equations solution (XᵀX)⁻¹Xᵀy.
pub fn ols_fit(dataset: &LabeledDataset) -> Result<DVector<f64>, SolverError> {
    let x = dataset.covariates();
    let gram = x.transpose() * x;
    let rhs = x.transpose() * dataset.responses();
    Cholesky::new(gram)
        .map(|chol| chol.solve(&rhs))
        .ok_or(SolverError::SingularDesign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::CustomLink;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn decrement_hand_values() {
        let h = RobustHessian {
            matrix: DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]),
            repaired: false,
            min_eig_before: 1.0,
            flags: Default::default(),
        };
        let g = DVector::from_vec(vec![2.0, 3.0]);
        assert_relative_eq!(
            newton_decrement(&g, &h).unwrap(),
            10.0f64.sqrt(),
            epsilon = 1e-12
        );

        let id = RobustHessian {
            matrix: DMatrix::identity(2, 2),
            repaired: false,
            min_eig_before: 1.0,
            flags: Default::default(),
        };
        assert_relative_eq!(newton_decrement(&g, &id).unwrap(), g.norm(), epsilon = 1e-12);
        assert_eq!(
            newton_decrement(&DVector::zeros(2), &id).unwrap(),
            0.0
        );
    }

    #[test]
    fn ols_identity_design_returns_y() {
        let data = LabeledDataset::new(DMatrix::identity(3, 3), DVector::from_vec(vec![1.0, -2.0, 5.0]));
        let fit = ols_fit(&data).unwrap();
        assert_relative_eq!(fit[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit[1], -2.0, epsilon = 1e-12);
        assert_relative_eq!(fit[2], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn ols_recovers_noiseless_truth_and_zeroes_residual() {
        let x = DMatrix::from_row_slice(5, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 1.0, 0.0, 1.0, 2.0, -2.0]);
        let truth = DVector::from_vec(vec![0.7, -1.3]);
        let y = &x * &truth;
        let data = LabeledDataset::new(x.clone(), y.clone());
        let fit = ols_fit(&data).unwrap();
        assert!((fit.clone() - truth).norm() < 1e-10);
        let residual = x.transpose() * (y - x * fit);
        assert!(residual.norm() < 1e-8);
    }

    #[test]
    fn singular_design_is_reported() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let data = LabeledDataset::new(x, DVector::zeros(3));
        assert!(matches!(ols_fit(&data), Err(SolverError::SingularDesign)));
    }

    #[test]
    fn quartic_linesearch_accepts_unit_step() {
        // single-sample custom link: loss(θ) = θ⁴ via Φ(u) = u⁴, y = 0, x = 1
        let quartic = CustomLink {
            phi: |u| u.powi(4),
            dphi: |u| 4.0 * u.powi(3),
            d2phi: |u| 12.0 * u * u,
            d3phi: |u| 24.0 * u,
        };
        let model = GlmModel::custom(quartic);
        let data = LabeledDataset::new(DMatrix::from_element(1, 1, 1.0), DVector::zeros(1));
        let theta = DVector::from_vec(vec![1.0]);
        let direction = DVector::from_vec(vec![-1.0 / 3.0]); // -f''(1)^{-1} f'(1)
        let g = DVector::from_vec(vec![4.0]);
        let ncfg = NewtonConfig {
            kappa1: 0.3,
            zeta: 0.0,
            ..NewtonConfig::new(10)
        };
        let result = backtracking_linesearch(
            &data,
            &model,
            &theta,
            &direction,
            &g,
            &RobustConfig::none(),
            &ncfg,
        )
        .unwrap();
        // f(2/3) = 16/81 ≈ 0.1975 ≤ f(1) + 0.3·(4·(−1/3)) = 0.6
        assert_eq!(result.alpha, 1.0);
        assert!(!result.hit_floor);
    }

    #[test]
    fn huge_zeta_accepts_immediately() {
        let model = GlmModel::identity();
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, -1.0]);
        let y = DVector::from_vec(vec![0.5, 1.0, 0.0]);
        let data = LabeledDataset::new(x, y);
        let theta = DVector::from_vec(vec![5.0]);
        let g = robust_gradient(&data, &model, &theta, &RobustConfig::none())
            .unwrap()
            .value;
        let uphill = g.clone(); // ascent direction; only the tolerance saves it
        let ncfg = NewtonConfig {
            zeta: 1e12,
            ..NewtonConfig::new(5)
        };
        let result = backtracking_linesearch(
            &data,
            &model,
            &theta,
            &uphill,
            &g,
            &RobustConfig::none(),
            &ncfg,
        )
        .unwrap();
        assert_eq!(result.alpha, 1.0);
    }

    #[test]
    fn gradient_descent_zero_stepsize_stays_put() {
        let model = GlmModel::identity();
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, -1.0]);
        let y = DVector::from_vec(vec![0.5, 1.0, 0.0]);
        let data = LabeledDataset::new(x, y);
        let theta0 = DVector::from_vec(vec![3.0]);
        let trace =
            robust_gradient_descent(&data, &model, &theta0, &RobustConfig::none(), 0.0, 4).unwrap();
        assert_eq!(trace.len(), 5);
        for record in &trace.records {
            assert_relative_eq!(record.theta[0], 3.0, epsilon = 0.0);
        }
    }
}
