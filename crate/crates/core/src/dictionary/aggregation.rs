use faer::{Mat, MatRef};

use crate::c64;
use crate::error::{ensure_dim, Result};

/// Equivalence classes of the `N^2` columns of `U^* • U`.
///
/// Column `a * N + b` equals `u_a^* ∘ u_b`, which depends only on the cyclic
/// per-axis difference `b - a`; that difference (flattened with the usual
/// element ordering) is the class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationMap {
    pub n_y: usize,
    pub n_z: usize,
    pub class_of: Vec<usize>,
}

impl AggregationMap {
    pub fn new(n_y: usize, n_z: usize) -> Self {
        let n = n_y * n_z;
        let mut class_of = Vec::with_capacity(n * n);
        for a in 0..n {
            let (ay, az) = (a / n_z, a % n_z);
            for b in 0..n {
                let (by, bz) = (b / n_z, b % n_z);
                let cy = (by + n_y - ay) % n_y;
                let cz = (bz + n_z - az) % n_z;
                class_of.push(cy * n_z + cz);
            }
        }
        AggregationMap { n_y, n_z, class_of }
    }

    pub fn n(&self) -> usize {
        self.n_y * self.n_z
    }

    /// The `{0,1}` matrix of shape `N x N^2` with one nonzero per column.
    pub fn materialize(&self) -> Mat<c64> {
        let mut p = Mat::zeros(self.n(), self.class_of.len());
        for (col, &class) in self.class_of.iter().enumerate() {
            p[(class, col)] = c64::new(1.0, 0.0);
        }
        p
    }

    /// `m * P` without materializing `P`: column `j` of the result is column
    /// `class_of[j]` of `m`.
    pub fn expand_columns(&self, m: MatRef<'_, c64>) -> Result<Mat<c64>> {
        ensure_dim("aggregation input columns", self.n(), m.ncols())?;
        Ok(Mat::from_fn(m.nrows(), self.class_of.len(), |i, j| m[(i, self.class_of[j])]))
    }

    /// `P * m`: rows of `m` belonging to the same class are summed.
    pub fn aggregate_rows(&self, m: MatRef<'_, c64>) -> Result<Mat<c64>> {
        ensure_dim("aggregation input rows", self.class_of.len(), m.nrows())?;
        let mut out = Mat::zeros(self.n(), m.ncols());
        for j in 0..m.ncols() {
            for (row, &class) in self.class_of.iter().enumerate() {
                out[(class, j)] += m[(row, j)];
            }
        }
        Ok(out)
    }
}
