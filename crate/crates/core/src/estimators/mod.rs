//! Robust multivariate mean estimation.
//!
//! Two estimators are provided. [`huber_estimate`] is the recursive agnostic
//! mean for ε-contaminated data: it truncates outliers, averages the
//! low-variance directions, and recurses on the span of the top principal
//! components. [`mom_estimate`] targets heavy-tailed data: it averages the
//! cloud block-wise and combines the block means with a geometric median.

mod cloud;
mod geomedian;
mod huber;
mod mom;
mod pca;

pub use cloud::PointCloud;
pub use geomedian::{geometric_median, geometric_median_iterates};
pub use huber::{huber_estimate, huber_truncate};
pub use mom::{mom_bucket_count, mom_estimate};
pub use pca::top_k_principal_subspace;

use nalgebra::DVector;
use thiserror::Error;

/// Errors shared by the estimator entry points.
#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("matrix is not symmetric: max |A - A^T| = {max_asymmetry:.3e} exceeds tolerance")]
    NotSymmetric { max_asymmetry: f64 },
    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),
}

/// Non-fatal conditions encountered while computing an estimate.
///
/// Estimators always return a value; these flags record when a fallback or
/// clamp was taken along the way so callers can surface it in diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimateFlags {
    /// Truncation retained fewer than two points; the untruncated mean was
    /// used instead.
    pub degenerate_truncation: bool,
    /// The retained-fraction formula fell outside (0, 1] and was clamped.
    pub fraction_clamped: bool,
    /// An iterative solver stopped at its iteration cap before reaching its
    /// movement tolerance.
    pub non_convergence: bool,
}

impl EstimateFlags {
    pub fn union(self, other: EstimateFlags) -> EstimateFlags {
        EstimateFlags {
            degenerate_truncation: self.degenerate_truncation || other.degenerate_truncation,
            fraction_clamped: self.fraction_clamped || other.fraction_clamped,
            non_convergence: self.non_convergence || other.non_convergence,
        }
    }

    pub fn any(self) -> bool {
        self.degenerate_truncation || self.fraction_clamped || self.non_convergence
    }
}

/// A robust location estimate together with the flags raised while
/// computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: DVector<f64>,
    pub flags: EstimateFlags,
}

impl Estimate {
    pub fn clean(value: DVector<f64>) -> Self {
        Estimate {
            value,
            flags: EstimateFlags::default(),
        }
    }
}

/// Configuration for the recursive agnostic mean ([`huber_estimate`]).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HuberConfig {
    /// Contamination fraction, in `[0, 0.5)`.
    pub epsilon: f64,
    /// Failure probability, in `(0, 1)`.
    pub delta: f64,
    /// Truncation constant for the 1-d interval rule.
    pub c_interval: f64,
    /// Truncation constant for the multivariate ball rule.
    pub c_ball: f64,
}

impl HuberConfig {
    /// Defaults keep the retained fractions near (1 − ε)² at n ≈ 1000: the
    /// slack terms stay small, so truncation targets genuine outliers
    /// instead of discarding the bulk.
    pub fn new(epsilon: f64, delta: f64) -> Self {
        HuberConfig {
            epsilon,
            delta,
            c_interval: 0.2,
            c_ball: 0.2,
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(EstimatorError::InvalidConfig(format!(
                "epsilon must lie in [0, 0.5), got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(EstimatorError::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.c_interval <= 0.0 || self.c_ball <= 0.0 {
            return Err(EstimatorError::InvalidConfig(
                "truncation constants must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Configuration for the median-of-means estimator ([`mom_estimate`]).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MomConfig {
    /// Failure probability, in `(0, 1)`; drives the bucket count.
    pub delta: f64,
    /// Upper bound on the number of buckets.
    pub max_buckets: usize,
    /// Movement tolerance for the geometric-median iteration.
    pub weiszfeld_tol: f64,
    /// Iteration cap for the geometric-median iteration.
    pub weiszfeld_max_iter: usize,
}

impl MomConfig {
    pub fn new(delta: f64) -> Self {
        MomConfig {
            delta,
            max_buckets: usize::MAX,
            weiszfeld_tol: 1e-9,
            weiszfeld_max_iter: 200,
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(EstimatorError::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.max_buckets == 0 {
            return Err(EstimatorError::InvalidConfig(
                "max_buckets must be positive".into(),
            ));
        }
        if !(self.weiszfeld_tol > 0.0) {
            return Err(EstimatorError::InvalidConfig(
                "weiszfeld_tol must be positive".into(),
            ));
        }
        if self.weiszfeld_max_iter == 0 {
            return Err(EstimatorError::InvalidConfig(
                "weiszfeld_max_iter must be positive".into(),
            ));
        }
        Ok(())
    }
}
