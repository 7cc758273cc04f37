//! Hessian-free robust Newton: the Newton direction is found by conjugate
//! gradient on finite-difference Hessian-vector products built from robust
//! gradients, so no p×p matrix is ever estimated.

use std::time::Instant;

use nalgebra::DVector;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::models::{validate_glm_inputs, GlmModel, LabeledDataset};
use crate::newton::{IterateRecord, IterateTrace, NewtonConfig, SolverError};
use crate::robust_derivatives::{robust_gradient, robust_loss_value, RobustConfig, RobustError};

/// Configuration of the conjugate-gradient Newton solver.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CgConfig {
    /// Finite-difference increment for Hessian-vector products.
    pub fd_delta: f64,
    /// Inner CG iterations; `None` uses the parameter dimension p, the exact
    /// termination bound for noiseless CG.
    pub inner_iters: Option<usize>,
    /// Early exit once ‖r_k‖₂ falls to this value; 0 runs all inner
    /// iterations.
    pub residual_tol: f64,
    /// Seed the inner iterate randomly instead of starting from zero.
    /// Zero start makes r₀ = g(θ) exactly and saves one product.
    pub random_init_seed: Option<u64>,
    /// Outer-loop and linesearch parameters.
    pub newton: NewtonConfig,
}

impl CgConfig {
    pub fn new(newton: NewtonConfig) -> Self {
        CgConfig {
            fd_delta: 1e-9,
            inner_iters: None,
            residual_tol: 0.0,
            random_init_seed: None,
            newton,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.fd_delta > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "fd_delta must be positive, got {}",
                self.fd_delta
            )));
        }
        if self.inner_iters == Some(0) {
            return Err(SolverError::InvalidConfig(
                "inner_iters must be positive".into(),
            ));
        }
        if !(self.residual_tol >= 0.0) {
            return Err(SolverError::InvalidConfig(
                "residual_tol must be nonnegative".into(),
            ));
        }
        self.newton.validate()
    }
}

/// Result of one conjugate-gradient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CgStep {
    pub direction: DVector<f64>,
    /// ‖r_k‖₂ after each update, starting with ‖r₀‖₂.
    pub residual_norms: Vec<f64>,
    /// The inner loop met a direction of nonpositive curvature and stopped,
    /// returning the iterate built so far.
    pub curvature_breakdown: bool,
    pub iterations: usize,
}

/// Conjugate gradient for H·Δ = −g given only the product operator `apply`.
///
/// Runs the standard recurrence from `init` for at most `max_iters` steps or
/// until ‖r_k‖₂ ≤ `residual_tol`. Nonpositive curvature pᵀHp stops the loop
/// with a flag; the current iterate is still returned, since with robust
/// (noisy) products this is a recoverable condition for the outer loop.
pub fn cg_solve<E, F>(
    mut apply: F,
    g: &DVector<f64>,
    init: DVector<f64>,
    max_iters: usize,
    residual_tol: f64,
) -> Result<CgStep, E>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>, E>,
{
    let mut delta = init;
    let mut residual = if delta.iter().all(|&v| v == 0.0) {
        g.clone()
    } else {
        apply(&delta)? + g
    };
    let mut direction = -&residual;
    let mut rr = residual.dot(&residual);
    let mut residual_norms = vec![rr.sqrt()];
    let mut breakdown = false;
    let mut iterations = 0;

    for _ in 0..max_iters {
        if rr.sqrt() <= residual_tol {
            break;
        }
        let h_dir = apply(&direction)?;
        let curvature = direction.dot(&h_dir);
        if curvature <= 0.0 {
            breakdown = true;
            break;
        }
        let alpha = rr / curvature;
        delta.axpy(alpha, &direction, 1.0);
        residual.axpy(alpha, &h_dir, 1.0);
        let rr_next = residual.dot(&residual);
        residual_norms.push(rr_next.sqrt());
        let beta = rr_next / rr;
        direction = direction * beta - &residual;
        rr = rr_next;
        iterations += 1;
    }

    Ok(CgStep {
        direction: delta,
        residual_norms,
        curvature_breakdown: breakdown,
        iterations,
    })
}

fn hv_product_cached(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
    v: &DVector<f64>,
    g_theta: &DVector<f64>,
    rcfg: &RobustConfig,
    fd_delta: f64,
) -> Result<DVector<f64>, RobustError> {
    let shifted = theta + v * fd_delta;
    let g_shifted = robust_gradient(dataset, model, &shifted, rcfg)?.value;
    Ok((g_shifted - g_theta) / fd_delta)
}

/// Finite-difference Hessian-vector product
/// `(g(θ + δ·v) − g(θ)) / δ` built from two robust gradient estimates.
pub fn hv_product(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
    v: &DVector<f64>,
    rcfg: &RobustConfig,
    fd_delta: f64,
) -> Result<DVector<f64>, SolverError> {
    if !(fd_delta > 0.0) {
        return Err(SolverError::InvalidConfig(format!(
            "fd_delta must be positive, got {fd_delta}"
        )));
    }
    rcfg.validate().map_err(RobustError::from)?;
    validate_glm_inputs(dataset, model, theta).map_err(RobustError::from)?;
    let g_theta = robust_gradient(dataset, model, theta, rcfg)?.value;
    hv_product_cached(dataset, model, theta, v, &g_theta, rcfg, fd_delta).map_err(Into::into)
}

fn cg_initial_iterate(ccfg: &CgConfig, p: usize) -> DVector<f64> {
    match ccfg.random_init_seed {
        None => DVector::zeros(p),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng))
        }
    }
}

fn cg_step_with_gradient(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
    g: &DVector<f64>,
    rcfg: &RobustConfig,
    ccfg: &CgConfig,
) -> Result<CgStep, RobustError> {
    let p = theta.len();
    let max_iters = ccfg.inner_iters.unwrap_or(p);
    // one robust gradient at θ is shared by every product at this iterate
    cg_solve(
        |v| hv_product_cached(dataset, model, theta, v, g, rcfg, ccfg.fd_delta),
        g,
        cg_initial_iterate(ccfg, p),
        max_iters,
        ccfg.residual_tol,
    )
}

/// One conjugate-gradient Newton direction at `theta`.
pub fn cg_newton_step(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
    rcfg: &RobustConfig,
    ccfg: &CgConfig,
) -> Result<CgStep, SolverError> {
    ccfg.validate()?;
    rcfg.validate().map_err(RobustError::from)?;
    validate_glm_inputs(dataset, model, theta).map_err(RobustError::from)?;
    let g = robust_gradient(dataset, model, theta, rcfg)?.value;
    cg_step_with_gradient(dataset, model, theta, &g, rcfg, ccfg).map_err(Into::into)
}

/// Robust Newton with conjugate-gradient inner solves.
///
/// The outer loop is identical to [`crate::newton::robust_newton`] except
/// that the step comes from [`cg_newton_step`]; the decrement column records
/// −g(θ)ᵀΔθ, which coincides with the Newton decrement when the inner solve
/// is exact. Curvature breakdowns are flagged on the trace record.
pub fn cg_robust_newton(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta0: &DVector<f64>,
    rcfg: &RobustConfig,
    ccfg: &CgConfig,
) -> Result<IterateTrace, SolverError> {
    ccfg.validate()?;
    rcfg.validate().map_err(RobustError::from)?;
    validate_glm_inputs(dataset, model, theta0).map_err(RobustError::from)?;

    let ncfg = &ccfg.newton;
    let truth = dataset.truth.clone();
    let mut records = Vec::with_capacity(ncfg.max_iters + 1);
    let mut theta = theta0.clone();

    let param_error =
        |t: &DVector<f64>| truth.as_ref().map_or(f64::NAN, |star| (t - star).norm());

    for _ in 0..ncfg.max_iters {
        let started = Instant::now();
        let g = robust_gradient(dataset, model, &theta, rcfg)?.value;
        let grad_norm = g.norm();
        let loss = robust_loss_value(dataset, model, &theta, rcfg)?;

        if grad_norm <= ncfg.grad_tol {
            records.push(IterateRecord {
                theta: theta.clone(),
                alpha: f64::NAN,
                grad_norm_est: grad_norm,
                decrement_sq: f64::NAN,
                loss_est: loss,
                hessian_repaired: false,
                curvature_breakdown: false,
                linesearch_floor: false,
                param_error: param_error(&theta),
                elapsed: started.elapsed(),
            });
            return Ok(IterateTrace { records });
        }

        let step = cg_step_with_gradient(dataset, model, &theta, &g, rcfg, ccfg)?;
        let decrement_sq = -g.dot(&step.direction);
        let ls = crate::newton::backtracking_linesearch(
            dataset,
            model,
            &theta,
            &step.direction,
            &g,
            rcfg,
            ncfg,
        )?;
        let next = &theta + &step.direction * ls.alpha;
        records.push(IterateRecord {
            theta: theta.clone(),
            alpha: ls.alpha,
            grad_norm_est: grad_norm,
            decrement_sq,
            loss_est: loss,
            hessian_repaired: false,
            curvature_breakdown: step.curvature_breakdown,
            linesearch_floor: ls.hit_floor,
            param_error: param_error(&theta),
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
        param_error: param_error(&theta),
        elapsed: started.elapsed(),
    });
    Ok(IterateTrace { records })
}
