//! GLM loss families: per-sample loss, gradient, and Hessian for linear and
//! logistic regression, plus empirical curvature diagnostics.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("logistic responses must lie in {{0, 1}}; row {row} has y = {value}")]
    NonBinaryLabel { row: usize, value: f64 },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
}

/// A convex link supplied by the caller, as a triple of derivatives of Φ
/// (plus the third derivative, used only by curvature diagnostics).
#[derive(Debug, Clone, Copy)]
pub struct CustomLink {
    pub phi: fn(f64) -> f64,
    pub dphi: fn(f64) -> f64,
    pub d2phi: fn(f64) -> f64,
    pub d3phi: fn(f64) -> f64,
}

/// Link function of the GLM.
#[derive(Debug, Clone, Copy)]
pub enum Link {
    /// Φ(u) = u²/2; the loss is squared error up to a constant offset.
    Identity,
    /// Φ(u) = log(1 + eᵘ); logistic regression with labels in {0, 1}.
    Logistic,
    /// Caller-supplied derivatives.
    Custom(CustomLink),
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// A GLM loss family. `scale` records the scale parameter c(σ) of the
/// conditional density; the loss itself is the negative log-likelihood in
/// natural units, −y·xᵀθ + Φ(xᵀθ), which does not involve the scale.
#[derive(Debug, Clone, Copy)]
pub struct GlmModel {
    pub link: Link,
    pub scale: f64,
}

impl GlmModel {
    pub fn identity() -> Self {
        GlmModel {
            link: Link::Identity,
            scale: 1.0,
        }
    }

    pub fn logistic() -> Self {
        GlmModel {
            link: Link::Logistic,
            scale: 1.0,
        }
    }

    pub fn custom(link: CustomLink) -> Self {
        GlmModel {
            link: Link::Custom(link),
            scale: 1.0,
        }
    }

    pub fn phi(&self, u: f64) -> f64 {
        match self.link {
            Link::Identity => 0.5 * u * u,
            // evaluated as u + log1p(e^{-u}) for u > 0 to avoid overflow
            Link::Logistic => {
                if u > 0.0 {
                    u + (-u).exp().ln_1p()
                } else {
                    u.exp().ln_1p()
                }
            }
            Link::Custom(c) => (c.phi)(u),
        }
    }

    pub fn phi_prime(&self, u: f64) -> f64 {
        match self.link {
            Link::Identity => u,
            Link::Logistic => sigmoid(u),
            Link::Custom(c) => (c.dphi)(u),
        }
    }

    pub fn phi_double_prime(&self, u: f64) -> f64 {
        match self.link {
            Link::Identity => 1.0,
            Link::Logistic => {
                let s = sigmoid(u);
                s * (1.0 - s)
            }
            Link::Custom(c) => (c.d2phi)(u),
        }
    }

    pub fn phi_triple_prime(&self, u: f64) -> f64 {
        match self.link {
            Link::Identity => 0.0,
            Link::Logistic => {
                let s = sigmoid(u);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            Link::Custom(c) => (c.d3phi)(u),
        }
    }

    /// Per-sample loss as a function of the linear predictor u = xᵀθ.
    pub fn loss_at(&self, u: f64, y: f64) -> f64 {
        -y * u + self.phi(u)
    }

    /// Scalar multiplying x in the per-sample gradient.
    pub fn gradient_factor(&self, u: f64, y: f64) -> f64 {
        self.phi_prime(u) - y
    }

    /// Scalar multiplying x xᵀ in the per-sample Hessian.
    pub fn hessian_factor(&self, u: f64) -> f64 {
        self.phi_double_prime(u)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.scale > 0.0) {
            return Err(ModelError::InvalidConfig(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

/// Covariates, responses, and optional generator provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    /// True for rows the generator contaminated; `None` for external data.
    pub outlier_mask: Option<Vec<bool>>,
    /// The generating parameter θ*, when known (simulation only).
    pub truth: Option<DVector<f64>>,
}

impl LabeledDataset {
    /// # Panics
    /// Panics if the row counts of `x`, `y`, or the mask disagree.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Self {
        assert_eq!(x.nrows(), y.len(), "X rows and y length must agree");
        LabeledDataset {
            x,
            y,
            outlier_mask: None,
            truth: None,
        }
    }

    pub fn with_provenance(
        x: DMatrix<f64>,
        y: DVector<f64>,
        outlier_mask: Vec<bool>,
        truth: DVector<f64>,
    ) -> Self {
        assert_eq!(x.nrows(), y.len(), "X rows and y length must agree");
        assert_eq!(x.nrows(), outlier_mask.len(), "mask length must match rows");
        assert_eq!(x.ncols(), truth.len(), "truth dimension must match X");
        LabeledDataset {
            x,
            y,
            outlier_mask: Some(outlier_mask),
            truth: Some(truth),
        }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.n() == 0
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn responses(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn row(&self, i: usize) -> (nalgebra::RowDVector<f64>, f64) {
        (nalgebra::RowDVector::from(self.x.row(i)), self.y[i])
    }

    /// Linear predictors Xθ for every row.
    pub fn predictors(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.x * theta
    }
}

/// Checks that `theta` matches the dataset dimension, and that responses are
/// binary when the link is logistic.
pub fn validate_glm_inputs(
    dataset: &LabeledDataset,
    model: &GlmModel,
    theta: &DVector<f64>,
) -> Result<(), ModelError> {
    model.validate()?;
    if theta.len() != dataset.p() {
        return Err(ModelError::DimensionMismatch {
            expected: dataset.p(),
            got: theta.len(),
        });
    }
    if matches!(model.link, Link::Logistic) {
        for i in 0..dataset.n() {
            let y = dataset.responses()[i];
            if y != 0.0 && y != 1.0 {
                return Err(ModelError::NonBinaryLabel { row: i, value: y });
            }
        }
    }
    Ok(())
}

/// Per-sample loss −y·xᵀθ + Φ(xᵀθ).
pub fn loss(
    model: &GlmModel,
    theta: &DVector<f64>,
    x: &DVector<f64>,
    y: f64,
) -> Result<f64, ModelError> {
    if x.len() != theta.len() {
        return Err(ModelError::DimensionMismatch {
            expected: theta.len(),
            got: x.len(),
        });
    }
    Ok(model.loss_at(x.dot(theta), y))
}

/// Per-sample gradient (Φ′(xᵀθ) − y)·x.
pub fn gradient(
    model: &GlmModel,
    theta: &DVector<f64>,
    x: &DVector<f64>,
    y: f64,
) -> Result<DVector<f64>, ModelError> {
    if x.len() != theta.len() {
        return Err(ModelError::DimensionMismatch {
            expected: theta.len(),
            got: x.len(),
        });
    }
    Ok(x * model.gradient_factor(x.dot(theta), y))
}

/// Per-sample Hessian Φ″(xᵀθ)·x xᵀ; symmetric and PSD by construction.
pub fn hessian(
    model: &GlmModel,
    theta: &DVector<f64>,
    x: &DVector<f64>,
    y: f64,
) -> Result<DMatrix<f64>, ModelError> {
    let _ = y;
    if x.len() != theta.len() {
        return Err(ModelError::DimensionMismatch {
            expected: theta.len(),
            got: x.len(),
        });
    }
    let factor = model.hessian_factor(x.dot(theta));
    Ok(x * x.transpose() * factor)
}

/// Mean Hessian (1/n)·Σ Φ″(x_iᵀθ)·x_i x_iᵀ over the dataset.
pub fn mean_hessian(dataset: &LabeledDataset, model: &GlmModel, theta: &DVector<f64>) -> DMatrix<f64> {
    let u = dataset.predictors(theta);
    let mut scaled = dataset.covariates().clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= model.hessian_factor(u[i]);
    }
    let h = dataset.covariates().transpose() * scaled / dataset.n() as f64;
    (&h + h.transpose()) * 0.5
}

/// Empirical curvature estimates around an anchor point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureReport {
    /// Smallest eigenvalue of the mean Hessian over the probes.
    pub m_hat: f64,
    /// Largest eigenvalue of the mean Hessian over the probes.
    pub big_m_hat: f64,
    /// Largest observed spectral-norm Lipschitz ratio between probe pairs.
    pub l_hat: f64,
    /// Every probe pair was too close to estimate a Lipschitz ratio.
    pub degenerate_probe: bool,
}

fn spectral_norm(sym: &DMatrix<f64>) -> f64 {
    sym.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, &l| m.max(l.abs()))
}

/// Samples parameter points uniformly in a ball around `anchor` and reports
/// extreme eigenvalues of the mean Hessian plus an empirical Lipschitz
/// constant for it. Advisory values for sanity-checking strong convexity;
/// never used to gate the optimizers.
pub fn curvature_diagnostics(
    model: &GlmModel,
    dataset: &LabeledDataset,
    probe_count: usize,
    radius: f64,
    anchor: &DVector<f64>,
    seed: u64,
) -> Result<CurvatureReport, ModelError> {
    assert!(probe_count >= 2, "need at least two probes");
    validate_glm_inputs(dataset, model, anchor)?;

    let p = dataset.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = Vec::with_capacity(probe_count);
    for _ in 0..probe_count {
        let mut dir = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
        let norm = dir.norm();
        if norm > 0.0 {
            dir /= norm;
        }
        let r = radius * rng.gen::<f64>().powf(1.0 / p as f64);
        probes.push(anchor + dir * r);
    }

    let hessians: Vec<DMatrix<f64>> = probes
        .iter()
        .map(|theta| mean_hessian(dataset, model, theta))
        .collect();

    let mut m_hat = f64::INFINITY;
    let mut big_m_hat = f64::NEG_INFINITY;
    for h in &hessians {
        let eigen = h.clone().symmetric_eigen();
        for &l in eigen.eigenvalues.iter() {
            m_hat = m_hat.min(l);
            big_m_hat = big_m_hat.max(l);
        }
    }

    let mut l_hat = 0.0f64;
    let mut usable_pair = false;
    for a in 0..probe_count {
        for b in (a + 1)..probe_count {
            let dist = (&probes[a] - &probes[b]).norm();
            if dist <= 1e-12 {
                continue;
            }
            usable_pair = true;
            l_hat = l_hat.max(spectral_norm(&(&hessians[a] - &hessians[b])) / dist);
        }
    }

    Ok(CurvatureReport {
        m_hat,
        big_m_hat,
        l_hat,
        degenerate_probe: !usable_pair,
    })
}
