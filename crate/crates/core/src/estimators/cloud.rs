use nalgebra::{DMatrix, DVector, RowDVector};

/// An ordered collection of `d`-dimensional points, stored as the rows of an
/// `n × d` matrix.
///
/// All points share the dimension fixed at construction; estimation calls
/// treat the cloud as immutable. Row order is significant: block partitioning
/// and truncation both preserve it.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: DMatrix<f64>,
}

impl PointCloud {
    /// Wraps an `n × d` matrix whose rows are the points.
    pub fn from_matrix(data: DMatrix<f64>) -> Self {
        PointCloud { data }
    }

    /// Builds a cloud from individual points.
    ///
    /// # Panics
    /// Panics if the points do not all share one dimension.
    pub fn from_points(points: &[DVector<f64>]) -> Self {
        let n = points.len();
        let d = points.first().map_or(0, |p| p.len());
        assert!(
            points.iter().all(|p| p.len() == d),
            "all points in a cloud must share one dimension"
        );
        let mut data = DMatrix::zeros(n, d);
        for (i, p) in points.iter().enumerate() {
            data.row_mut(i).copy_from(&p.transpose());
        }
        PointCloud { data }
    }

    /// Builds a 1-d cloud from scalars.
    pub fn from_scalars(values: &[f64]) -> Self {
        PointCloud {
            data: DMatrix::from_iterator(values.len(), 1, values.iter().copied()),
        }
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.data.row(i).transpose()
    }

    pub fn row(&self, i: usize) -> RowDVector<f64> {
        RowDVector::from(self.data.row(i))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Column `j` of the underlying matrix: the `j`-th coordinate of every
    /// point, in input order.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.data.column(j).iter().copied().collect()
    }

    /// Coordinate-wise mean.
    pub fn mean(&self) -> DVector<f64> {
        let n = self.len() as f64;
        self.data.row_sum().transpose() / n
    }

    /// Two-pass mean-centered covariance, normalized by `n`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.len();
        let mean = self.mean();
        let mut centered = self.data.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let cov = centered.transpose() * &centered / n as f64;
        // symmetrize away rounding from the gemm
        (&cov + cov.transpose()) * 0.5
    }

    /// New cloud keeping rows at the given indices, in the order given.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let rows: Vec<_> = indices.iter().map(|&i| self.data.row(i)).collect();
        PointCloud {
            data: DMatrix::from_rows(&rows),
        }
    }

    /// Projects every point onto the columns of `basis` (`d × k`), yielding a
    /// `k`-dimensional cloud of coefficients in input order.
    pub fn project(&self, basis: &DMatrix<f64>) -> PointCloud {
        PointCloud {
            data: &self.data * basis,
        }
    }

    /// Translates every point by `shift`.
    pub fn translate(&self, shift: &DVector<f64>) -> PointCloud {
        let mut data = self.data.clone();
        for mut row in data.row_iter_mut() {
            row += shift.transpose();
        }
        PointCloud { data }
    }
}
