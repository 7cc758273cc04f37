use nalgebra::DVector;

use super::cloud::PointCloud;
use super::{Estimate, EstimateFlags, EstimatorError};

/// Distance below which an iterate is treated as coinciding with a data
/// point, triggering the Vardi–Zhang correction.
const COINCIDENCE_TOL: f64 = 1e-12;

/// Geometric median by Weiszfeld iteration, returning every iterate.
///
/// Starts from the coordinate-wise mean. When an iterate lands on a data
/// point the plain update is undefined; the Vardi–Zhang correction blends
/// the Weiszfeld point of the remaining data with the current iterate, and
/// recognizes the case where the data point itself is the median. The
/// iteration stops when successive iterates move less than `tol`; hitting
/// `max_iter` first raises the `non_convergence` flag on the returned (best)
/// iterate rather than failing.
pub fn geometric_median_iterates(
    points: &PointCloud,
    tol: f64,
    max_iter: usize,
) -> Result<(Estimate, Vec<DVector<f64>>), EstimatorError> {
    if points.is_empty() {
        return Err(EstimatorError::EmptyCloud);
    }
    if !(tol > 0.0) {
        return Err(EstimatorError::InvalidConfig(format!(
            "tol must be positive, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(EstimatorError::InvalidConfig(
            "max_iter must be positive".into(),
        ));
    }

    let n = points.len();
    let d = points.dim();
    let mut current = points.mean();
    let mut iterates = vec![current.clone()];
    let mut converged = false;

    for _ in 0..max_iter {
        let mut weighted_sum = DVector::<f64>::zeros(d);
        let mut weight_total = 0.0;
        let mut pull = DVector::<f64>::zeros(d);
        let mut coincident = 0.0f64;

        for i in 0..n {
            let point = points.point(i);
            let diff = &point - &current;
            let dist = diff.norm();
            if dist <= COINCIDENCE_TOL {
                coincident += 1.0;
            } else {
                weighted_sum.axpy(1.0 / dist, &point, 1.0);
                weight_total += 1.0 / dist;
                pull.axpy(1.0 / dist, &diff, 1.0);
            }
        }

        if weight_total == 0.0 {
            // every point coincides with the iterate
            converged = true;
            break;
        }

        let weiszfeld_point = weighted_sum / weight_total;
        let next = if coincident > 0.0 {
            let pull_norm = pull.norm();
            if pull_norm <= coincident {
                // the coinciding data point is itself the median
                converged = true;
                break;
            }
            let blend = coincident / pull_norm;
            weiszfeld_point * (1.0 - blend) + &current * blend
        } else {
            weiszfeld_point
        };

        let step = (&next - &current).norm();
        current = next;
        iterates.push(current.clone());
        if step < tol {
            converged = true;
            break;
        }
    }

    let estimate = Estimate {
        value: current,
        flags: EstimateFlags {
            non_convergence: !converged,
            ..EstimateFlags::default()
        },
    };
    Ok((estimate, iterates))
}

/// Point minimizing the sum of Euclidean distances to the cloud.
pub fn geometric_median(
    points: &PointCloud,
    tol: f64,
    max_iter: usize,
) -> Result<Estimate, EstimatorError> {
    geometric_median_iterates(points, tol, max_iter).map(|(est, _)| est)
}
