//! Robust gradient, Hessian, and loss estimation at a parameter point.
//!
//! Each operation builds the cloud of per-sample derivatives (or losses) and
//! hands it to the estimator selected by [`RobustConfig`]: the agnostic mean
//! for Huber contamination, median-of-means for heavy tails, or the plain
//! mean when robustification is bypassed. Hessians are estimated on
//! row-major flattened per-sample matrices and eigenvalue-clipped back to
//! positive definiteness afterwards.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::estimators::{
    huber_estimate, mom_estimate, Estimate, EstimateFlags, EstimatorError, HuberConfig, MomConfig,
    PointCloud,
};
use crate::models::{validate_glm_inputs, GlmModel, LabeledDataset, ModelError};

#[derive(Debug, Error)]
pub enum RobustError {
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which contamination model the estimators should assume. Exactly one
/// estimator configuration is carried per kind; `None` bypasses
/// robustification entirely (plain means), which is the oracle baseline.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contamination {
    Huber(HuberConfig),
    HeavyTail(MomConfig),
    None,
}

/// Estimator selection plus the Hessian repair floor.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RobustConfig {
    pub contamination: Contamination,
    /// Eigenvalues of the estimated Hessian below this floor are raised to
    /// it, so Newton solves stay well-posed under estimator noise.
    pub hessian_eig_floor: f64,
}

pub const DEFAULT_HESSIAN_EIG_FLOOR: f64 = 1e-8;

impl RobustConfig {
    pub fn huber(cfg: HuberConfig) -> Self {
        RobustConfig {
            contamination: Contamination::Huber(cfg),
            hessian_eig_floor: DEFAULT_HESSIAN_EIG_FLOOR,
        }
    }

    pub fn heavy_tail(cfg: MomConfig) -> Self {
        RobustConfig {
            contamination: Contamination::HeavyTail(cfg),
            hessian_eig_floor: DEFAULT_HESSIAN_EIG_FLOOR,
        }
    }

    pub fn none() -> Self {
        RobustConfig {
            contamination: Contamination::None,
            hessian_eig_floor: DEFAULT_HESSIAN_EIG_FLOOR,
        }
    }

    pub fn validate(&self) -> Result<(), RobustError> {
        match &self.contamination {
            Contamination::Huber(cfg) => cfg.validate()?,
            Contamination::HeavyTail(cfg) => cfg.validate()?,
            Contamination::None => {}
        }
        if self.hessian_eig_floor < 0.0 {
            return Err(RobustError::Estimator(EstimatorError::InvalidConfig(
                "hessian_eig_floor must be nonnegative".into(),
            )));
        }
        Ok(())
    }
}

/// Row-major vectorization of a matrix.
pub fn flatten(matrix: &DMatrix<f64>) -> DVector<f64> {
    let (r, c) = matrix.shape();
    DVector::from_fn(r * c, |idx, _| matrix[(idx / c, idx % c)])
}

/// Inverse of [`flatten`] for square matrices.
///
/// # Panics
/// Panics if the length is not a perfect square.
pub fn unflatten(vector: &DVector<f64>) -> DMatrix<f64> {
    let len = vector.len();
    let p = (len as f64).sqrt().round() as usize;
    assert_eq!(p * p, len, "flattened Hessian length must be a square");
    DMatrix::from_fn(p, p, |i, j| vector[i * p + j])
}

fn estimate_cloud(cloud: &PointCloud, cfg: &RobustConfig) -> Result<Estimate, EstimatorError> {
    match &cfg.contamination {
        Contamination::Huber(hcfg) => huber_estimate(cloud, hcfg),
        Contamination::HeavyTail(mcfg) => mom_estimate(cloud, mcfg),
        Contamination::None => {
            if cloud.is_empty() {
                return Err(EstimatorError::EmptyCloud);
            }
            Ok(Estimate::clean(cloud.mean()))
        }
    }
}

/// Cloud of per-sample gradients {∇L(θ, z_i)} in row order.
pub fn gradient_cloud(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
) -> PointCloud {
    let u = dataset.predictors(theta);
    let mut rows = dataset.covariates().clone();
    for (i, mut row) in rows.row_iter_mut().enumerate() {
        row *= model.gradient_factor(u[i], dataset.responses()[i]);
    }
    PointCloud::from_matrix(rows)
}

/// Robust estimate of the population gradient at `theta`.
pub fn robust_gradient(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
    cfg: &RobustConfig,
) -> Result<Estimate, RobustError> {
    cfg.validate()?;
    validate_glm_inputs(dataset, model, theta)?;
    if dataset.is_empty() {
        return Err(RobustError::Estimator(EstimatorError::EmptyCloud));
    }
    match &cfg.contamination {
        Contamination::None => {
            // plain mean, computed directly as X^T f / n
            let u = dataset.predictors(theta);
            let factors = DVector::from_fn(dataset.n(), |i, _| {
                model.gradient_factor(u[i], dataset.responses()[i])
            });
            let g = dataset.covariates().transpose() * factors / dataset.n() as f64;
            Ok(Estimate::clean(g))
        }
        _ => {
            let cloud = gradient_cloud(dataset, model, theta);
            estimate_cloud(&cloud, cfg).map_err(Into::into)
        }
    }
}

/// A robustly estimated Hessian after symmetrization and eigenvalue repair.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustHessian {
    pub matrix: DMatrix<f64>,
    /// True iff the eigenvalue clip changed the matrix.
    pub repaired: bool,
    /// Smallest eigenvalue before repair.
    pub min_eig_before: f64,
    pub flags: EstimateFlags,
}

fn clip_eigenvalues(sym: DMatrix<f64>, floor: f64, flags: EstimateFlags) -> RobustHessian {
    let eigen = sym.clone().symmetric_eigen();
    let min_eig_before = eigen.eigenvalues.min();
    if min_eig_before >= floor {
        return RobustHessian {
            matrix: sym,
            repaired: false,
            min_eig_before,
            flags,
        };
    }
    let mut clipped = eigen;
    for l in clipped.eigenvalues.iter_mut() {
        if *l < floor {
            *l = floor;
        }
    }
    let recomposed = clipped.recompose();
    let matrix = (&recomposed + recomposed.transpose()) * 0.5;
    RobustHessian {
        matrix,
        repaired: true,
        min_eig_before,
        flags,
    }
}

/// Cloud of row-major flattened per-sample Hessians.
pub fn hessian_cloud(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
) -> PointCloud {
    let n = dataset.n();
    let p = dataset.p();
    let u = dataset.predictors(theta);
    let mut data = DMatrix::zeros(n, p * p);
    for i in 0..n {
        let w = model.hessian_factor(u[i]);
        let x = dataset.covariates().row(i);
        for a in 0..p {
            let xa_w = x[a] * w;
            for b in 0..p {
                data[(i, a * p + b)] = xa_w * x[b];
            }
        }
    }
    PointCloud::from_matrix(data)
}

/// Robust estimate of the population Hessian at `theta`.
///
/// The per-sample Hessians are flattened row-major, estimated as a p²-dim
/// cloud, unflattened, symmetrized via (H + Hᵀ)/2, and eigenvalue-clipped at
/// the configured floor. For Huber contamination this costs roughly p⁶ work
/// per call, which is the known scaling wall of the approach; fine for the
/// desk scales (p ≤ 20) this crate targets.
pub fn robust_hessian(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
    cfg: &RobustConfig,
) -> Result<RobustHessian, RobustError> {
    cfg.validate()?;
    validate_glm_inputs(dataset, model, theta)?;
    if dataset.is_empty() {
        return Err(RobustError::Estimator(EstimatorError::EmptyCloud));
    }
    let (raw, flags) = match &cfg.contamination {
        Contamination::None => (
            crate::models::mean_hessian(dataset, model, theta),
            EstimateFlags::default(),
        ),
        _ => {
            let cloud = hessian_cloud(dataset, model, theta);
            let est = estimate_cloud(&cloud, cfg)?;
            (unflatten(&est.value), est.flags)
        }
    };
    let sym = (&raw + raw.transpose()) * 0.5;
    Ok(clip_eigenvalues(sym, cfg.hessian_eig_floor, flags))
}

/// Robust estimate of the population risk at `theta`: the configured 1-d
/// estimator applied to the per-sample losses (plain empirical risk when
/// robustification is off).
pub fn robust_loss_value(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
    cfg: &RobustConfig,
) -> Result<f64, RobustError> {
    cfg.validate()?;
    validate_glm_inputs(dataset, model, theta)?;
    if dataset.is_empty() {
        return Err(RobustError::Estimator(EstimatorError::EmptyCloud));
    }
    let u = dataset.predictors(theta);
    let losses: Vec<f64> = (0..dataset.n())
        .map(|i| model.loss_at(u[i], dataset.responses()[i]))
        .collect();
    match &cfg.contamination {
        Contamination::None => Ok(losses.iter().sum::<f64>() / losses.len() as f64),
        _ => {
            let cloud = PointCloud::from_scalars(&losses);
            Ok(estimate_cloud(&cloud, cfg)?.value[0])
        }
    }
}
