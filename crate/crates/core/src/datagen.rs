//! Seeded synthetic data for the three benchmark scenarios.
//!
//! Generation is a pure function of the [`ScenarioSpec`]: draws come from a
//! ChaCha8 stream seeded with the spec's seed, consumed in a fixed order
//! (row by row, covariates before the response, clean rows before outliers,
//! then one shuffle pass). The same spec therefore reproduces the same
//! dataset bit for bit on any platform, for a fixed dependency lockfile.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::models::LabeledDataset;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which synthetic experiment to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Linear model with an ε fraction of wide-covariate, zero-response
    /// outliers.
    LinearHuber,
    /// Logistic model with an ε fraction of labels replaced by fair coins.
    LogisticFlip,
    /// Linear model with centered Pareto noise and no contaminating rows.
    LinearPareto,
}

fn default_sigma() -> f64 {
    1.0
}

fn default_beta() -> f64 {
    1.0
}

/// Full description of a synthetic dataset; generation depends on nothing
/// else.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub p: usize,
    pub n: usize,
    /// Contamination fraction (Huber scenarios).
    #[serde(default)]
    pub epsilon: f64,
    /// Noise scale (Pareto scenario).
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Pareto tail index (Pareto scenario).
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.n < 1 {
            return Err(DatagenError::InvalidSpec("n must be at least 1".into()));
        }
        if self.p < 1 {
            return Err(DatagenError::InvalidSpec("p must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(DatagenError::InvalidSpec(format!(
                "epsilon must lie in [0, 0.5), got {}",
                self.epsilon
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(DatagenError::InvalidSpec(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.beta > 0.0) {
            return Err(DatagenError::InvalidSpec(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// θ* used by every scenario: (1/√p)·(1, …, 1).
pub fn truth_vector(p: usize) -> DVector<f64> {
    DVector::from_element(p, 1.0 / (p as f64).sqrt())
}

fn normal_row(rng: &mut ChaCha8Rng, p: usize, std: f64) -> Vec<f64> {
    (0..p)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * std
        })
        .collect()
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn assemble(
    rows: Vec<Vec<f64>>,
    responses: Vec<f64>,
    mask: Vec<bool>,
    truth: DVector<f64>,
    rng: &mut ChaCha8Rng,
    shuffle: bool,
) -> LabeledDataset {
    let n = rows.len();
    let p = truth.len();
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        order.shuffle(rng);
    }
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    let mut reordered_mask = vec![false; n];
    for (dst, &src) in order.iter().enumerate() {
        for j in 0..p {
            x[(dst, j)] = rows[src][j];
        }
        y[dst] = responses[src];
        reordered_mask[dst] = mask[src];
    }
    LabeledDataset::with_provenance(x, y, reordered_mask, truth)
}

/// Linear regression under Huber contamination: ⌈(1−ε)n⌉ clean rows with
/// x ~ N(0, I_p) and y = xᵀθ* + w, w ~ N(0, 0.1) (variance 0.1), and ⌊εn⌋
/// outlier rows with x ~ N(0, p²·I_p) and y = 0, shuffled together.
pub fn gen_linear_huber(spec: &ScenarioSpec) -> Result<LabeledDataset, DatagenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = truth_vector(spec.p);
    let noise_std = 0.1f64.sqrt();
    let n_outlier = (spec.epsilon * spec.n as f64).floor() as usize;
    let n_clean = spec.n - n_outlier;

    let mut rows = Vec::with_capacity(spec.n);
    let mut responses = Vec::with_capacity(spec.n);
    let mut mask = Vec::with_capacity(spec.n);
    for _ in 0..n_clean {
        let x = normal_row(&mut rng, spec.p, 1.0);
        let mean: f64 = x.iter().zip(truth.iter()).map(|(a, b)| a * b).sum();
        let w: f64 = StandardNormal.sample(&mut rng);
        rows.push(x);
        responses.push(mean + w * noise_std);
        mask.push(false);
    }
    for _ in 0..n_outlier {
        rows.push(normal_row(&mut rng, spec.p, spec.p as f64));
        responses.push(0.0);
        mask.push(true);
    }
    Ok(assemble(rows, responses, mask, truth, &mut rng, true))
}

/// Logistic regression with flipped labels: x ~ N(0, I_p), y ~
/// Bernoulli(sigmoid(xᵀθ*)), then a uniformly random ⌊εn⌋-subset of labels
/// is replaced by independent fair coins. The mask marks replaced rows.
pub fn gen_logistic_flip(spec: &ScenarioSpec) -> Result<LabeledDataset, DatagenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = truth_vector(spec.p);

    let mut rows = Vec::with_capacity(spec.n);
    let mut responses = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let x = normal_row(&mut rng, spec.p, 1.0);
        let u: f64 = x.iter().zip(truth.iter()).map(|(a, b)| a * b).sum();
        let label = if rng.gen::<f64>() < sigmoid(u) { 1.0 } else { 0.0 };
        rows.push(x);
        responses.push(label);
    }

    let n_flip = (spec.epsilon * spec.n as f64).floor() as usize;
    let mut indices: Vec<usize> = (0..spec.n).collect();
    indices.shuffle(&mut rng);
    let mut chosen: Vec<usize> = indices.into_iter().take(n_flip).collect();
    chosen.sort_unstable();
    let mut mask = vec![false; spec.n];
    for &i in &chosen {
        responses[i] = if rng.gen::<bool>() { 1.0 } else { 0.0 };
        mask[i] = true;
    }
    // rows are already in random draw order; no extra shuffle
    Ok(assemble(rows, responses, mask, truth, &mut rng, false))
}

/// Linear regression with heavy-tailed noise: x ~ N(0, I_p) and
/// y = xᵀθ* + w, where w = σ·(U^{−1/β} − b) is a Pareto draw via the inverse
/// CDF, centered by b = β/(β−1) when β > 1 (the mean does not exist
/// otherwise and no centering is applied). σ acts as a scale parameter; for
/// β ≤ 2 the noise variance is infinite, so it is not a standard deviation.
pub fn gen_linear_pareto(spec: &ScenarioSpec) -> Result<LabeledDataset, DatagenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = truth_vector(spec.p);
    let center = if spec.beta > 1.0 {
        spec.beta / (spec.beta - 1.0)
    } else {
        0.0
    };

    let mut rows = Vec::with_capacity(spec.n);
    let mut responses = Vec::with_capacity(spec.n);
    let mask = vec![false; spec.n];
    for _ in 0..spec.n {
        let x = normal_row(&mut rng, spec.p, 1.0);
        let mean: f64 = x.iter().zip(truth.iter()).map(|(a, b)| a * b).sum();
        let u: f64 = 1.0 - rng.gen::<f64>(); // in (0, 1], keeps the draw finite
        let w = spec.sigma * (u.powf(-1.0 / spec.beta) - center);
        rows.push(x);
        responses.push(mean + w);
    }
    Ok(assemble(rows, responses, mask, truth, &mut rng, false))
}

/// Dispatch on the scenario tag.
pub fn gen_dataset(spec: &ScenarioSpec) -> Result<LabeledDataset, DatagenError> {
    match spec.scenario {
        Scenario::LinearHuber => gen_linear_huber(spec),
        Scenario::LogisticFlip => gen_logistic_flip(spec),
        Scenario::LinearPareto => gen_linear_pareto(spec),
    }
}

/// Writes the dataset as CSV with columns `x_1..x_p,y,is_outlier`.
pub fn write_dataset_csv<W: Write>(dataset: &LabeledDataset, out: &mut W) -> std::io::Result<()> {
    let p = dataset.p();
    let mut header = String::new();
    for j in 0..p {
        header.push_str(&format!("x_{},", j + 1));
    }
    header.push_str("y,is_outlier");
    writeln!(out, "{header}")?;
    for i in 0..dataset.n() {
        let mut line = String::new();
        for j in 0..p {
            line.push_str(&format!("{},", dataset.covariates()[(i, j)]));
        }
        let outlier = dataset
            .outlier_mask
            .as_ref()
            .map_or(0, |m| m[i] as u8);
        line.push_str(&format!("{},{}", dataset.responses()[i], outlier));
        writeln!(out, "{line}")?;
    }
    Ok(())
}
