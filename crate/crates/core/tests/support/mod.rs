//! Test-only oracles, independent of the library's linear algebra and
//! estimator implementations.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Cyclic Jacobi eigensolver for symmetric matrices, run until the
/// off-diagonal mass is below `tol`. Returns (eigenvalues, eigenvectors as
/// columns), unsorted.
pub fn jacobi_eigen(matrix: &DMatrix<f64>, tol: f64) -> (DVector<f64>, DMatrix<f64>) {
    let d = matrix.nrows();
    assert_eq!(d, matrix.ncols());
    let mut a = matrix.clone();
    let mut v = DMatrix::<f64>::identity(d, d);

    let off = |a: &DMatrix<f64>| -> f64 {
        let mut sum = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    sum += a[(i, j)] * a[(i, j)];
                }
            }
        }
        sum.sqrt()
    };

    for _sweep in 0..200 {
        if off(&a) <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (DVector::from_fn(d, |i, _| a[(i, i)]), v)
}

/// Projector onto the span of the k leading Jacobi eigenvectors.
pub fn jacobi_top_k_projector(matrix: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (values, vectors) = jacobi_eigen(matrix, 1e-12);
    let d = matrix.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut basis = DMatrix::zeros(d, k);
    for (dst, &src) in order.iter().take(k).enumerate() {
        basis.column_mut(dst).copy_from(&vectors.column(src));
    }
    &basis * basis.transpose()
}

/// Sum of Euclidean distances from `at` to each point.
pub fn distance_sum(points: &[(f64, f64)], at: (f64, f64)) -> f64 {
    points
        .iter()
        .map(|p| ((p.0 - at.0).powi(2) + (p.1 - at.1).powi(2)).sqrt())
        .sum()
}

/// Brute-force grid minimizer of the distance sum over a square window,
/// refined level by level until the cell size drops below 1e-6. Each level
/// scans a full 41×41 grid, so the argmin never relies on gradient
/// information from the implementation under test.
pub fn grid_geometric_median(points: &[(f64, f64)], lo: (f64, f64), hi: (f64, f64)) -> (f64, f64) {
    let mut lo = lo;
    let mut hi = hi;
    let mut best = lo;
    loop {
        let steps = 40usize;
        let dx = (hi.0 - lo.0) / steps as f64;
        let dy = (hi.1 - lo.1) / steps as f64;
        let mut best_val = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                let cand = (lo.0 + dx * i as f64, lo.1 + dy * j as f64);
                let val = distance_sum(points, cand);
                if val < best_val {
                    best_val = val;
                    best = cand;
                }
            }
        }
        if dx.max(dy) < 1e-6 {
            return best;
        }
        lo = (best.0 - 2.0 * dx, best.1 - 2.0 * dy);
        hi = (best.0 + 2.0 * dx, best.1 + 2.0 * dy);
    }
}

pub fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

pub fn percentile(mut values: Vec<f64>, q: f64) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let idx = ((values.len() as f64 - 1.0) * q).round() as usize;
    values[idx]
}
