use nalgebra::DMatrix;

use super::EstimatorError;

/// Relative tolerance for the symmetry check on input covariance matrices.
const SYMMETRY_RTOL: f64 = 1e-9;

/// Eigendecomposition of a symmetric matrix with a deterministic ordering:
/// eigenvalues descending, exact ties broken by the ascending index of each
/// eigenvector's dominant coordinate. Eigenvector signs are fixed so the
/// dominant coordinate is positive.
pub(crate) fn sorted_symmetric_eigen(matrix: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let d = matrix.nrows();
    let eigen = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    let dominant = |col: usize| -> usize {
        let v = eigen.eigenvectors.column(col);
        let mut best = 0;
        for i in 1..d {
            if v[i].abs() > v[best].abs() {
                best = i;
            }
        }
        best
    };
    let dominants: Vec<usize> = (0..d).map(dominant).collect();
    order.sort_by(|&a, &b| {
        let (la, lb) = (eigen.eigenvalues[a], eigen.eigenvalues[b]);
        lb.total_cmp(&la)
            .then(dominants[a].cmp(&dominants[b]))
            .then(a.cmp(&b))
    });

    let values: Vec<f64> = order.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let col = eigen.eigenvectors.column(src);
        let sign = if col[dominants[src]] < 0.0 { -1.0 } else { 1.0 };
        vectors.column_mut(dst).copy_from(&(col * sign));
    }
    (values, vectors)
}

/// Orthonormal basis (`d × k`) for the span of the `k` leading eigenvectors
/// of a symmetric matrix.
///
/// The input must be symmetric within a small relative tolerance; it is
/// symmetrized as `(A + Aᵀ)/2` before decomposition. Tied eigenvalues are
/// ordered by the ascending coordinate index of each eigenvector's dominant
/// component, which makes the basis deterministic for e.g. identity inputs.
pub fn top_k_principal_subspace(
    cov: &DMatrix<f64>,
    k: usize,
) -> Result<DMatrix<f64>, EstimatorError> {
    let d = cov.nrows();
    assert!(k >= 1 && k <= d, "k must lie in [1, d]");
    assert_eq!(cov.nrows(), cov.ncols(), "covariance must be square");

    let scale = cov.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
    let max_asymmetry = (cov - cov.transpose())
        .iter()
        .fold(0.0f64, |m, &x| m.max(x.abs()));
    if max_asymmetry > SYMMETRY_RTOL * scale {
        return Err(EstimatorError::NotSymmetric { max_asymmetry });
    }

    let sym = (cov + cov.transpose()) * 0.5;
    let (_, vectors) = sorted_symmetric_eigen(&sym);
    Ok(vectors.columns(0, k).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_ties_break_by_coordinate() {
        let cov = DMatrix::<f64>::identity(4, 4);
        let basis = top_k_principal_subspace(&cov, 2).unwrap();
        for i in 0..4 {
            assert_relative_eq!(basis[(i, 0)], if i == 0 { 1.0 } else { 0.0 }, epsilon = 1e-12);
            assert_relative_eq!(basis[(i, 1)], if i == 1 { 1.0 } else { 0.0 }, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_picks_largest() {
        let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0, 9.0]));
        let basis = top_k_principal_subspace(&cov, 1).unwrap();
        assert_relative_eq!(basis[(0, 0)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(basis[(1, 0)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(basis[(2, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let mut cov = DMatrix::<f64>::identity(3, 3);
        cov[(0, 1)] = 0.5;
        let err = top_k_principal_subspace(&cov, 1).unwrap_err();
        assert!(matches!(err, EstimatorError::NotSymmetric { .. }));
    }

    #[test]
    fn basis_is_orthonormal() {
        // fixed symmetric matrix, no randomness needed
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, 0.3, -0.1, 0.7, //
                0.3, 1.5, 0.2, -0.4, //
                -0.1, 0.2, 3.1, 0.0, //
                0.7, -0.4, 0.0, 0.9,
            ],
        );
        let basis = top_k_principal_subspace(&a, 3).unwrap();
        let gram = basis.transpose() * &basis;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(gram[(i, j)], expect, epsilon = 1e-10);
            }
        }
    }
}
