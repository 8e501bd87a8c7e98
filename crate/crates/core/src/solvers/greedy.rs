//! Greedy pursuits. Columns are assumed normalized; correlations are used raw.

use faer::{Col, ColRef, Mat, MatRef};

use crate::c64;
use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{all_finite, cholesky, matmul};
use faer::linalg::solvers::Solve;

/// Relative ridge used when the support Gram matrix is not numerically
/// positive definite.
pub const REFIT_RIDGE: f64 = 1e-10;

/// Residuals below this fraction of `||y||` count as zero.
pub const RELATIVE_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyParams {
    /// Atoms for OMP and SOMP, blocks for BOMP.
    pub k_max: usize,
    /// Stop once the residual Frobenius norm is at or below this value.
    pub residual_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutput {
    /// `n x P` coefficients, zero off the support.
    pub x: Mat<c64>,
    /// Selected columns in selection order.
    pub support: Vec<usize>,
    /// Residual norm before the first selection and after every refit.
    pub residual_norms: Vec<f64>,
}

impl GreedyOutput {
    pub fn iterations(&self) -> usize {
        self.residual_norms.len() - 1
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&0.0)
    }
}

fn check_inputs(y: MatRef<'_, c64>, a: MatRef<'_, c64>, params: &GreedyParams) -> Result<()> {
    ensure_dim("observation rows", a.nrows(), y.nrows())?;
    if params.k_max == 0 {
        return Err(Error::InvalidConfig("k_max must be at least 1".into()));
    }
    if !all_finite(y) || !all_finite(a) {
        return Err(Error::NonFinite("greedy solver input"));
    }
    Ok(())
}

/// Least-squares coefficients of every column of `y` on `a[:, support]`,
/// via normal equations; a rank-deficient support falls back to a ridge of
/// [`REFIT_RIDGE`] times the mean Gram diagonal.
pub fn refit(y: MatRef<'_, c64>, a: MatRef<'_, c64>, support: &[usize]) -> Result<Mat<c64>> {
    let k = support.len();
    let sub = Mat::from_fn(a.nrows(), k, |i, j| a[(i, support[j])]);
    let mut gram = matmul(sub.adjoint(), sub.as_ref());
    let mut rhs = matmul(sub.adjoint(), y);
    let llt = match cholesky(gram.as_ref()) {
        Ok(llt) => llt,
        Err(_) => {
            let mean_diag = (0..k).map(|i| gram[(i, i)].re).sum::<f64>() / k.max(1) as f64;
            let ridge = REFIT_RIDGE * mean_diag.max(f64::MIN_POSITIVE);
            for i in 0..k {
                gram[(i, i)] += c64::new(ridge, 0.0);
            }
            cholesky(gram.as_ref())?
        }
    };
    llt.solve_in_place(rhs.as_mut());
    Ok(rhs)
}

fn scatter(coef: MatRef<'_, c64>, support: &[usize], n: usize) -> Mat<c64> {
    let mut x = Mat::zeros(n, coef.ncols());
    for (row, &s) in support.iter().enumerate() {
        for j in 0..coef.ncols() {
            x[(s, j)] = coef[(row, j)];
        }
    }
    x
}

/// Shared pursuit loop. `groups[g]` lists the columns of candidate `g`; the
/// score of a candidate is the summed squared correlation of its columns with
/// every residual column.
fn pursue(y: MatRef<'_, c64>, a: MatRef<'_, c64>, groups: &[Vec<usize>], params: &GreedyParams) -> Result<GreedyOutput> {
    let n = a.ncols();
    let mut chosen = vec![false; groups.len()];
    let mut support: Vec<usize> = Vec::new();
    let mut residual = y.to_owned();
    let mut norms = vec![residual.norm_l2()];
    let mut coef = Mat::zeros(0, y.ncols());
    let max_groups = params.k_max.min(groups.len());
    let stop = params.residual_threshold.max(RELATIVE_ZERO * norms[0]);
    let mut picked = 0;
    while picked < max_groups && *norms.last().unwrap() > stop {
        let corr = matmul(a.adjoint(), residual.as_ref());
        let mut best: Option<(usize, f64)> = None;
        for (g, cols) in groups.iter().enumerate() {
            if chosen[g] {
                continue;
            }
            let score: f64 = cols
                .iter()
                .map(|&c| (0..corr.ncols()).map(|j| corr[(c, j)].norm_sqr()).sum::<f64>())
                .sum();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((g, score));
            }
        }
        let Some((g, score)) = best else { break };
        if score <= 0.0 {
            break;
        }
        chosen[g] = true;
        support.extend_from_slice(&groups[g]);
        picked += 1;
        coef = refit(y, a, &support)?;
        let fit = Mat::from_fn(a.nrows(), support.len(), |i, j| a[(i, support[j])]);
        residual = y - matmul(fit.as_ref(), coef.as_ref());
        norms.push(residual.norm_l2());
    }
    Ok(GreedyOutput {
        x: scatter(coef.as_ref(), &support, n),
        support,
        residual_norms: norms,
    })
}

/// Orthogonal matching pursuit on one observation vector.
pub fn omp(y: ColRef<'_, c64>, a: MatRef<'_, c64>, params: &GreedyParams) -> Result<GreedyOutput> {
    let y = y.as_mat();
    check_inputs(y, a, params)?;
    let groups: Vec<Vec<usize>> = (0..a.ncols()).map(|c| vec![c]).collect();
    pursue(y, a, &groups, params)
}

/// Simultaneous OMP: one support shared by every column of `y`.
pub fn somp(y: MatRef<'_, c64>, a: MatRef<'_, c64>, params: &GreedyParams) -> Result<GreedyOutput> {
    check_inputs(y, a, params)?;
    let groups: Vec<Vec<usize>> = (0..a.ncols()).map(|c| vec![c]).collect();
    pursue(y, a, &groups, params)
}

/// Block OMP over contiguous column blocks of length `block` (the last block
/// may be shorter). `params.k_max` counts blocks.
pub fn bomp(y: ColRef<'_, c64>, a: MatRef<'_, c64>, block: usize, params: &GreedyParams) -> Result<GreedyOutput> {
    let y = y.as_mat();
    check_inputs(y, a, params)?;
    if block == 0 {
        return Err(Error::InvalidConfig("block size must be at least 1".into()));
    }
    let n = a.ncols();
    let groups: Vec<Vec<usize>> = (0..n.div_ceil(block))
        .map(|b| (b * block..((b + 1) * block).min(n)).collect())
        .collect();
    pursue(y, a, &groups, params)
}

/// Applies a single-vector pursuit to every column of `y` independently.
pub fn per_column<F>(y: MatRef<'_, c64>, n: usize, mut solve: F) -> Result<Vec<GreedyOutput>>
where
    F: FnMut(ColRef<'_, c64>) -> Result<GreedyOutput>,
{
    (0..y.ncols())
        .map(|j| {
            let out = solve(y.col(j))?;
            ensure_dim("greedy output rows", n, out.x.nrows())?;
            Ok(out)
        })
        .collect()
}

/// Scales every column of `a` to unit norm. Returns the scaled matrix and the
/// original norms; zero columns are left untouched with norm 1.
pub fn normalize_columns(a: MatRef<'_, c64>) -> (Mat<c64>, Col<f64>) {
    let norms = Col::from_fn(a.ncols(), |j| {
        let v = a.col(j).norm_l2();
        if v > 0.0 {
            v
        } else {
            1.0
        }
    });
    let scaled = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] / norms[j]);
    (scaled, norms)
}
