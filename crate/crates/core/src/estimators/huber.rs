use nalgebra::DVector;

use super::cloud::PointCloud;
use super::pca::sorted_symmetric_eigen;
use super::{Estimate, EstimateFlags, EstimatorError, HuberConfig};

/// Lower clamp for the retained fraction: always keep a majority.
const MIN_FRACTION: f64 = 0.5;

fn clamp_fraction(raw: f64) -> (f64, bool) {
    if raw < MIN_FRACTION {
        (MIN_FRACTION, true)
    } else if raw > 1.0 {
        (1.0, true)
    } else {
        (raw, false)
    }
}

/// Fraction of points the 1-d interval rule keeps.
fn interval_fraction(cfg: &HuberConfig, n: usize) -> (f64, bool) {
    let n = n as f64;
    let slack = cfg.c_interval * ((n / cfg.delta).ln() / n).sqrt();
    clamp_fraction((1.0 - cfg.epsilon - slack) * (1.0 - cfg.epsilon))
}

/// Fraction of points the multivariate ball rule keeps.
fn ball_fraction(cfg: &HuberConfig, n: usize, d: usize) -> (f64, bool) {
    let (n, d) = (n as f64, d as f64);
    let log_term = (n / (d * cfg.delta)).ln().max(0.0);
    let slack = cfg.c_ball * ((d / n) * log_term).sqrt();
    clamp_fraction((1.0 - cfg.epsilon - slack) * (1.0 - cfg.epsilon))
}

fn retained_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).ceil() as usize).clamp(1, n)
}

/// Endpoints of the shortest window over `m` consecutive sorted values.
/// Ties go to the leftmost window.
fn shortest_window(sorted: &[f64], m: usize) -> (f64, f64) {
    debug_assert!(m >= 1 && m <= sorted.len());
    let mut best = 0;
    let mut best_span = sorted[m - 1] - sorted[0];
    for i in 1..=(sorted.len() - m) {
        let span = sorted[i + m - 1] - sorted[i];
        if span < best_span {
            best = i;
            best_span = span;
        }
    }
    (sorted[best], sorted[best + m - 1])
}

fn interval_truncate(cloud: &PointCloud, cfg: &HuberConfig) -> (PointCloud, EstimateFlags) {
    let values = cloud.coordinate(0);
    let n = values.len();
    let (fraction, clamped) = interval_fraction(cfg, n);
    let m = retained_count(fraction, n);
    let mut sorted = values.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let (a, b) = shortest_window(&sorted, m);
    let keep: Vec<usize> = (0..n).filter(|&i| values[i] >= a && values[i] <= b).collect();
    let flags = EstimateFlags {
        fraction_clamped: clamped,
        ..EstimateFlags::default()
    };
    (cloud.select(&keep), flags)
}

fn ball_truncate(cloud: &PointCloud, cfg: &HuberConfig) -> (PointCloud, EstimateFlags) {
    let n = cloud.len();
    let d = cloud.dim();
    let mut flags = EstimateFlags::default();

    // Screening center: independent 1-d estimates per coordinate, each with
    // its share delta/d of the failure budget.
    let coord_cfg = HuberConfig {
        delta: cfg.delta / d as f64,
        ..*cfg
    };
    let mut center = DVector::zeros(d);
    for j in 0..d {
        let coord_cloud = PointCloud::from_scalars(&cloud.coordinate(j));
        let est = estimate_recursive(&coord_cloud, &coord_cfg);
        center[j] = est.value[0];
        flags = flags.union(est.flags);
    }

    let distances: Vec<f64> = (0..n)
        .map(|i| (cloud.point(i) - &center).norm())
        .collect();
    let (fraction, clamped) = ball_fraction(cfg, n, d);
    flags.fraction_clamped |= clamped;
    let m = retained_count(fraction, n);
    let mut sorted = distances.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let radius = sorted[m - 1];
    let keep: Vec<usize> = (0..n).filter(|&i| distances[i] <= radius).collect();
    (cloud.select(&keep), flags)
}

fn truncate_with_flags(cloud: &PointCloud, cfg: &HuberConfig) -> (PointCloud, EstimateFlags) {
    if cloud.dim() == 1 {
        interval_truncate(cloud, cfg)
    } else {
        ball_truncate(cloud, cfg)
    }
}

/// Outlier truncation step of the agnostic mean.
///
/// For 1-d clouds, keeps the points inside the shortest interval containing
/// a `(1 − ε − C√(log(n/δ)/n))(1 − ε)` fraction of them. For multivariate
/// clouds, keeps the points inside the smallest ball, centered at the vector
/// of per-coordinate 1-d estimates, containing the analogous fraction.
/// The retained fraction is clamped to `[0.5, 1]`; output preserves input
/// order.
pub fn huber_truncate(cloud: &PointCloud, cfg: &HuberConfig) -> Result<PointCloud, EstimatorError> {
    cfg.validate()?;
    if cloud.is_empty() {
        return Err(EstimatorError::EmptyCloud);
    }
    Ok(truncate_with_flags(cloud, cfg).0)
}

fn estimate_recursive(cloud: &PointCloud, cfg: &HuberConfig) -> Estimate {
    let d = cloud.dim();
    let (truncated, mut flags) = truncate_with_flags(cloud, cfg);

    if truncated.len() < 2 {
        // Too little survives truncation to say anything; report the plain
        // mean of the original cloud instead.
        flags.degenerate_truncation = true;
        return Estimate {
            value: cloud.mean(),
            flags,
        };
    }

    if d == 1 {
        return Estimate {
            value: truncated.mean(),
            flags,
        };
    }

    // Split coordinates along the principal axes of the truncated cloud:
    // recurse on the span of the top ceil(d/2) components, average the rest.
    let cov = truncated.covariance();
    let k = d.div_ceil(2);
    let (_, eigenvectors) = sorted_symmetric_eigen(&cov);
    let top = eigenvectors.columns(0, k).into_owned();
    let rest = eigenvectors.columns(k, d - k).into_owned();

    let projected = truncated.project(&top);
    let sub = estimate_recursive(&projected, cfg);
    flags = flags.union(sub.flags);
    let rest_mean = truncated.project(&rest).mean();

    Estimate {
        value: &top * sub.value + &rest * rest_mean,
        flags,
    }
}

/// Recursive agnostic mean for Huber ε-contaminated clouds.
///
/// Truncates outliers, then recurses: 1-d clouds reduce to the mean of the
/// truncated set; higher-dimensional clouds split into the top `⌈d/2⌉`
/// principal components of the truncated covariance (estimated recursively,
/// with an unchanged failure budget) and their complement (plain mean). The
/// result is deterministic in the input.
pub fn huber_estimate(cloud: &PointCloud, cfg: &HuberConfig) -> Result<Estimate, EstimatorError> {
    cfg.validate()?;
    if cloud.is_empty() {
        return Err(EstimatorError::EmptyCloud);
    }
    Ok(estimate_recursive(cloud, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(epsilon: f64, delta: f64) -> HuberConfig {
        HuberConfig::new(epsilon, delta)
    }

    #[test]
    fn identical_points_survive_everything() {
        let cloud = PointCloud::from_points(&[
            DVector::from_vec(vec![5.0, 5.0]),
            DVector::from_vec(vec![5.0, 5.0]),
            DVector::from_vec(vec![5.0, 5.0]),
            DVector::from_vec(vec![5.0, 5.0]),
        ]);
        let est = huber_estimate(&cloud, &cfg(0.1, 0.1)).unwrap();
        assert_relative_eq!(est.value[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(est.value[1], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn interval_keeps_tight_cluster() {
        // epsilon/|S|/delta chosen so the retained fraction lands in
        // (0.5, 0.75], i.e. a 3-point window on 4 points.
        let c = HuberConfig {
            epsilon: 0.2,
            delta: 0.5,
            c_interval: 0.2,
            c_ball: 2.0,
        };
        let cloud = PointCloud::from_scalars(&[0.0, 0.1, 0.2, 50.0]);
        let kept = huber_truncate(&cloud, &c).unwrap();
        assert_eq!(kept.coordinate(0), vec![0.0, 0.1, 0.2]);
    }

    #[test]
    fn one_d_window_matches_enumeration_oracle() {
        // oracle: enumerate every m-point window of the sorted values
        let values = [0.0, 1.0, 2.0, 3.0, 100.0];
        let c = cfg(0.2, 0.5);
        let n = values.len();
        let (fraction, _) = interval_fraction(&c, n);
        let m = retained_count(fraction, n);
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let mut best: Option<(f64, f64)> = None;
        for w in sorted.windows(m) {
            let span = w[m - 1] - w[0];
            if best.map_or(true, |(a, b)| span < b - a) {
                best = Some((w[0], w[m - 1]));
            }
        }
        let (a, b) = best.unwrap();
        let expected: Vec<f64> = values.iter().copied().filter(|&v| v >= a && v <= b).collect();
        let expected_mean = expected.iter().sum::<f64>() / expected.len() as f64;

        let cloud = PointCloud::from_scalars(&values);
        assert!(b < 100.0, "oracle window must exclude the outlier");
        let est = huber_estimate(&cloud, &c).unwrap();
        assert_relative_eq!(est.value[0], expected_mean, epsilon = 1e-12);
        assert_relative_eq!(
            est.value[0],
            huber_truncate(&cloud, &c).unwrap().mean()[0],
            epsilon = 0.0
        );
    }

    #[test]
    fn ball_excludes_far_point() {
        let mut points = vec![DVector::from_vec(vec![0.0, 0.0]); 9];
        points.push(DVector::from_vec(vec![100.0, 100.0]));
        let cloud = PointCloud::from_points(&points);
        let kept = huber_truncate(&cloud, &cfg(0.1, 0.1)).unwrap();
        // distance-sorted quantile oracle: every zero point ties at radius 0,
        // so all nine are kept and the far point is dropped
        assert_eq!(kept.len(), 9);
        assert!(kept.coordinate(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn degenerate_truncation_falls_back_to_mean() {
        let cloud = PointCloud::from_scalars(&[1.0, 3.0]);
        let est = huber_estimate(&cloud, &cfg(0.2, 0.1)).unwrap();
        assert!(est.flags.degenerate_truncation);
        assert_relative_eq!(est.value[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_cloud_is_an_error() {
        let cloud = PointCloud::from_scalars(&[]);
        assert!(matches!(
            huber_estimate(&cloud, &cfg(0.1, 0.1)),
            Err(EstimatorError::EmptyCloud)
        ));
        assert!(matches!(
            huber_truncate(&cloud, &cfg(0.1, 0.1)),
            Err(EstimatorError::EmptyCloud)
        ));
    }

    #[test]
    fn fraction_clamp_is_flagged() {
        // an aggressive truncation constant forces the raw fraction below 1/2
        let c = HuberConfig {
            c_interval: 2.0,
            ..cfg(0.2, 0.5)
        };
        let cloud = PointCloud::from_scalars(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let est = huber_estimate(&cloud, &c).unwrap();
        assert!(est.flags.fraction_clamped);
    }
}
