//! Robust empirical-risk minimization for generalized linear models.
//!
//! The crate implements second-order optimization that stays usable when a
//! fraction of the data is corrupted (Huber contamination) or when the noise
//! is heavy-tailed. Per-sample gradients, Hessians, and losses are aggregated
//! with robust multivariate mean estimators instead of plain averages, and
//! the resulting estimates drive a damped Newton iteration with a robust
//! backtracking linesearch. A Hessian-free conjugate-gradient variant and a
//! first-order baseline are included, along with seeded generators for the
//! synthetic benchmark scenarios.

pub mod cg_newton;
pub mod datagen;
pub mod estimators;
pub mod models;
pub mod newton;
pub mod robust_derivatives;

pub use cg_newton::{cg_newton_step, cg_robust_newton, cg_solve, hv_product, CgConfig, CgStep};
pub use datagen::{gen_dataset, Scenario, ScenarioSpec};
pub use estimators::{
    geometric_median, huber_estimate, huber_truncate, mom_estimate, top_k_principal_subspace,
    Estimate, EstimateFlags, EstimatorError, HuberConfig, MomConfig, PointCloud,
};
pub use models::{
    curvature_diagnostics, CurvatureReport, GlmModel, LabeledDataset, Link, ModelError,
};
pub use newton::{
    backtracking_linesearch, newton_decrement, ols_fit, robust_gradient_descent, robust_newton,
    IterateRecord, IterateTrace, NewtonConfig, SolverError,
};
pub use robust_derivatives::{
    flatten, robust_gradient, robust_hessian, robust_loss_value, unflatten, Contamination,
    RobustConfig, RobustHessian,
};
