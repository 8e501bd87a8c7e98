//! Pattern-coupled sparse Bayesian learning on a (coefficient, subcarrier)
//! grid.
//!
//! Every coefficient `x[i, j]` has a zero-mean circular Gaussian prior with
//! precision `d[i, j] = alpha[i, j] + beta * (sum of alpha over grid
//! neighbors)`. The E-step computes the Gaussian posterior of each column; the
//! M-step sets
//! `alpha[i, j] = (a + 1) / (b + E[i, j] + beta * (sum of E over neighbors))`
//! with `E = |m|^2 + diag(Sigma)`. The complex posterior is why the numerator
//! is `a + 1`.
//!
//! Neighbors along the coefficient axis are `i - 1, i + 1`; along the
//! subcarrier axis `j - 1, j + 1`. Missing neighbors at the edges are simply
//! absent.

use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Col, ColRef, Mat, MatRef, Par, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{all_finite, matmul};

/// Noise variance is never taken below this fraction of the per-measurement
/// signal power.
pub const NOISE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Use the supplied variance throughout.
    #[default]
    Known,
    /// Re-estimate the variance in every EM iteration.
    Em,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcsblParams {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub noise_mode: NoiseMode,
}

impl Default for PcsblParams {
    fn default() -> Self {
        PcsblParams {
            a: 0.5,
            b: 1e-4,
            beta: 1.0,
            max_iters: 200,
            tol: 1e-4,
            noise_mode: NoiseMode::Known,
        }
    }
}

impl PcsblParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.a >= 0.0 && self.a.is_finite()) || !(self.b >= 0.0 && self.b.is_finite()) {
            return bad(format!("hyperprior (a, b) = ({}, {}) must be non-negative", self.a, self.b));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("coupling beta = {} must lie in [0, 1]", self.beta));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        Ok(())
    }
}

/// Which grid directions couple neighboring precisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coupling {
    pub coefficients: bool,
    pub subcarriers: bool,
}

impl Coupling {
    pub const CHAIN: Coupling = Coupling {
        coefficients: true,
        subcarriers: false,
    };
    pub const GRID: Coupling = Coupling {
        coefficients: true,
        subcarriers: true,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcsblOutput {
    /// Posterior means, `n x P`.
    pub x: Mat<c64>,
    /// Final hyperparameters `alpha`, `n x P`.
    pub alpha: Mat<f64>,
    /// Posterior variances from the last E-step, `n x P`.
    pub variances: Mat<f64>,
    pub noise_var: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `||Y - Omega X||_F`.
    pub residual: f64,
}

/// Sum over grid neighbors of `v`.
pub fn neighbor_sum(v: &Mat<f64>, coupling: Coupling) -> Mat<f64> {
    let (n, p) = (v.nrows(), v.ncols());
    Mat::from_fn(n, p, |i, j| {
        let mut s = 0.0;
        if coupling.coefficients {
            if i > 0 {
                s += v[(i - 1, j)];
            }
            if i + 1 < n {
                s += v[(i + 1, j)];
            }
        }
        if coupling.subcarriers {
            if j > 0 {
                s += v[(i, j - 1)];
            }
            if j + 1 < p {
                s += v[(i, j + 1)];
            }
        }
        s
    })
}

/// Cholesky of a Hermitian matrix, retrying with growing diagonal loading.
fn robust_llt(mut m: Mat<c64>) -> Result<Mat<c64>> {
    let n = m.nrows();
    let mean_diag = (0..n).map(|i| m[(i, i)].re.abs()).sum::<f64>() / n.max(1) as f64;
    let mut jitter = 1e-12 * mean_diag.max(f64::MIN_POSITIVE);
    for _ in 0..8 {
        if let Ok(llt) = m.llt(Side::Lower) {
            return Ok(llt.L().to_owned());
        }
        for i in 0..n {
            m[(i, i)] += c64::new(jitter, 0.0);
        }
        jitter *= 100.0;
    }
    Err(Error::Numerical("posterior factorization failed after diagonal loading".into()))
}

/// Posterior mean and variances of one column, through the `T x T` matrix
/// `sigma^2 I + Omega D^-1 Omega^H`.
pub(crate) fn estep_woodbury(omega: MatRef<'_, c64>, y: ColRef<'_, c64>, d: &[f64], noise_var: f64) -> Result<(Col<c64>, Vec<f64>)> {
    let (t, n) = (omega.nrows(), omega.ncols());
    let inv_d: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
    let scaled = Mat::from_fn(t, n, |r, c| omega[(r, c)] * inv_d[c]);
    let mut k = matmul(scaled.as_ref(), omega.adjoint());
    for i in 0..t {
        k[(i, i)] += c64::new(noise_var, 0.0);
    }
    let l = robust_llt(k)?;
    let mut w = omega.to_owned();
    solve_lower_triangular_in_place(l.as_ref(), w.as_mut(), Par::Seq);
    let mut z = y.to_owned();
    solve_lower_triangular_in_place(l.as_ref(), z.as_mat_mut(), Par::Seq);
    let mut m = Col::zeros(n);
    let mut var = vec![0.0; n];
    for i in 0..n {
        let wi = w.col(i);
        let ip: c64 = (0..t).map(|r| wi[r].conj() * z[r]).sum();
        m[i] = ip * inv_d[i];
        var[i] = (inv_d[i] - inv_d[i] * inv_d[i] * wi.squared_norm_l2()).max(0.0);
    }
    Ok((m, var))
}

/// Posterior mean and variances of one column, through the `n x n` precision
/// `sigma^-2 Omega^H Omega + D`.
pub(crate) fn estep_direct(
    gram: MatRef<'_, c64>,
    omega: MatRef<'_, c64>,
    y: ColRef<'_, c64>,
    d: &[f64],
    noise_var: f64,
) -> Result<(Col<c64>, Vec<f64>)> {
    let n = gram.nrows();
    let inv_s = 1.0 / noise_var;
    let mut prec = Mat::from_fn(n, n, |i, j| gram[(i, j)] * inv_s);
    for i in 0..n {
        prec[(i, i)] += c64::new(d[i], 0.0);
    }
    let l = robust_llt(prec)?;
    let mut linv = Mat::<c64>::identity(n, n);
    solve_lower_triangular_in_place(l.as_ref(), linv.as_mut(), Par::Seq);
    let var: Vec<f64> = (0..n).map(|i| linv.col(i).squared_norm_l2()).collect();
    let rhs = crate::linalg::matvec(omega.adjoint(), y) * faer::Scale(c64::new(inv_s, 0.0));
    let u = crate::linalg::matvec(linv.as_ref(), rhs.as_ref());
    let m = crate::linalg::matvec(linv.adjoint(), u.as_ref());
    Ok((m, var))
}

/// Full posterior covariance `(sigma^-2 Omega^H Omega + diag(d))^-1`.
pub fn posterior_covariance(omega: MatRef<'_, c64>, d: &[f64], noise_var: f64) -> Result<Mat<c64>> {
    let n = omega.ncols();
    ensure_dim("precision length", n, d.len())?;
    let mut prec = matmul(omega.adjoint(), omega) * faer::Scale(c64::new(1.0 / noise_var, 0.0));
    for i in 0..n {
        prec[(i, i)] += c64::new(d[i], 0.0);
    }
    let llt = prec.llt(Side::Lower).map_err(|e| Error::Numerical(format!("{e:?}")))?;
    let mut inv = Mat::<c64>::identity(n, n);
    llt.solve_in_place(inv.as_mut());
    Ok(inv)
}

/// EM iterations of the pattern-coupled model for `Y = Omega X + N`.
pub fn pcsbl(
    y: MatRef<'_, c64>,
    omega: MatRef<'_, c64>,
    noise_var: f64,
    params: &PcsblParams,
    coupling: Coupling,
) -> Result<PcsblOutput> {
    params.validate()?;
    ensure_dim("observation rows", omega.nrows(), y.nrows())?;
    if !all_finite(y) || !all_finite(omega) || !noise_var.is_finite() || noise_var < 0.0 {
        return Err(Error::NonFinite("pcsbl input"));
    }
    let (t, p, n) = (y.nrows(), y.ncols(), omega.ncols());
    let y_energy = y.squared_norm_l2();
    let omega_energy = omega.squared_norm_l2();
    if y_energy == 0.0 || omega_energy == 0.0 || t == 0 {
        return Ok(PcsblOutput {
            x: Mat::zeros(n, p),
            alpha: Mat::from_fn(n, p, |_, _| (params.a + 1.0) / params.b.max(f64::MIN_POSITIVE)),
            variances: Mat::zeros(n, p),
            noise_var,
            iterations: 0,
            converged: true,
            residual: 0.0,
        });
    }
    let floor = NOISE_FLOOR * y_energy / (t * p) as f64;
    let mut sigma2 = noise_var.max(floor);
    let var0 = y_energy / (p as f64 * omega_energy);
    let mut alpha = Mat::from_fn(n, p, |_, _| 1.0 / var0);
    let gram = (t >= n).then(|| matmul(omega.adjoint(), omega));

    let mut x_prev: Option<Mat<c64>> = None;
    let mut x = Mat::zeros(n, p);
    let mut variances = Mat::zeros(n, p);
    let mut iterations = 0;
    let mut converged = false;
    let beta = params.beta;
    while iterations < params.max_iters {
        iterations += 1;
        let nb = neighbor_sum(&alpha, coupling);
        let d = Mat::from_fn(n, p, |i, j| alpha[(i, j)] + beta * nb[(i, j)]);
        let cols: Vec<Result<(Col<c64>, Vec<f64>)>> = (0..p)
            .into_par_iter()
            .map(|j| {
                let dj: Vec<f64> = (0..n).map(|i| d[(i, j)]).collect();
                match &gram {
                    Some(g) => estep_direct(g.as_ref(), omega, y.col(j), &dj, sigma2),
                    None => estep_woodbury(omega, y.col(j), &dj, sigma2),
                }
            })
            .collect();
        for (j, col) in cols.into_iter().enumerate() {
            let (m, v) = col?;
            for i in 0..n {
                x[(i, j)] = m[i];
                variances[(i, j)] = v[i];
            }
        }
        let e = Mat::from_fn(n, p, |i, j| x[(i, j)].norm_sqr() + variances[(i, j)]);
        if params.noise_mode == NoiseMode::Em {
            let fit = (y - matmul(omega, x.as_ref())).squared_norm_l2();
            let mut gamma = 0.0;
            for j in 0..p {
                for i in 0..n {
                    gamma += 1.0 - d[(i, j)] * variances[(i, j)];
                }
            }
            sigma2 = ((fit + sigma2 * gamma) / (t * p) as f64).max(floor);
        }
        let enb = neighbor_sum(&e, coupling);
        alpha = Mat::from_fn(n, p, |i, j| (params.a + 1.0) / (params.b + e[(i, j)] + beta * enb[(i, j)]));
        if let Some(prev) = &x_prev {
            let base = prev.norm_l2();
            if base > 0.0 && (&x - prev).norm_l2() / base < params.tol {
                converged = true;
                break;
            }
        }
        x_prev = Some(x.clone());
    }
    let residual = (y - matmul(omega, x.as_ref())).norm_l2();
    Ok(PcsblOutput {
        x,
        alpha,
        variances,
        noise_var: sigma2,
        iterations,
        converged,
        residual,
    })
}

/// Single-vector pattern-coupled SBL with chain neighbors.
pub fn pcsbl_1d(y: ColRef<'_, c64>, a: MatRef<'_, c64>, noise_var: f64, params: &PcsblParams) -> Result<PcsblOutput> {
    pcsbl(y.as_mat(), a, noise_var, params, Coupling::CHAIN)
}

/// Joint recovery of all subcarriers with coupling along both grid axes.
pub fn pcsbl_2d(y: MatRef<'_, c64>, omega: MatRef<'_, c64>, noise_var: f64, params: &PcsblParams) -> Result<PcsblOutput> {
    pcsbl(y, omega, noise_var, params, Coupling::GRID)
}

/// [`pcsbl_1d`] applied to every column independently. `iterations` reports
/// the largest per-column count and `converged` whether every column did.
pub fn pcsbl_per_column(y: MatRef<'_, c64>, omega: MatRef<'_, c64>, noise_var: f64, params: &PcsblParams) -> Result<PcsblOutput> {
    let (n, p) = (omega.ncols(), y.ncols());
    let mut out = PcsblOutput {
        x: Mat::zeros(n, p),
        alpha: Mat::zeros(n, p),
        variances: Mat::zeros(n, p),
        noise_var,
        iterations: 0,
        converged: true,
        residual: 0.0,
    };
    let mut noise_sum = 0.0;
    for j in 0..p {
        let col = pcsbl_1d(y.col(j), omega, noise_var, params)?;
        for i in 0..n {
            out.x[(i, j)] = col.x[(i, 0)];
            out.alpha[(i, j)] = col.alpha[(i, 0)];
            out.variances[(i, j)] = col.variances[(i, 0)];
        }
        out.iterations = out.iterations.max(col.iterations);
        out.converged &= col.converged;
        noise_sum += col.noise_var;
    }
    out.noise_var = if p > 0 { noise_sum / p as f64 } else { noise_var };
    out.residual = (y - matmul(omega, out.x.as_ref())).norm_l2();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::child_rng;
    use crate::linalg::{complex_normal, matvec, rel_err};

    fn gaussian(m: usize, n: usize, seed: u64) -> Mat<c64> {
        let mut rng = child_rng(seed, "sbl", 0);
        let s = 1.0 / (m as f64).sqrt();
        Mat::from_fn(m, n, |_, _| complex_normal(&mut rng) * s)
    }

    /// Gauss-Jordan inverse with partial pivoting.
    fn invert(m: &Mat<c64>) -> Mat<c64> {
        let n = m.nrows();
        let mut a = m.clone();
        let mut inv = Mat::<c64>::identity(n, n);
        for c in 0..n {
            let piv = (c..n).max_by(|&x, &y| a[(x, c)].norm().total_cmp(&a[(y, c)].norm())).unwrap();
            for k in 0..n {
                let (u, v) = (a[(c, k)], a[(piv, k)]);
                a[(c, k)] = v;
                a[(piv, k)] = u;
                let (u, v) = (inv[(c, k)], inv[(piv, k)]);
                inv[(c, k)] = v;
                inv[(piv, k)] = u;
            }
            let s = c64::new(1.0, 0.0) / a[(c, c)];
            for k in 0..n {
                a[(c, k)] *= s;
                inv[(c, k)] *= s;
            }
            for r in 0..n {
                if r != c {
                    let f = a[(r, c)];
                    for k in 0..n {
                        let (ack, ick) = (a[(c, k)], inv[(c, k)]);
                        a[(r, k)] -= f * ack;
                        inv[(r, k)] -= f * ick;
                    }
                }
            }
        }
        inv
    }

    /// Textbook complex SBL, one hyperparameter per coefficient.
    fn sbl_oracle(y: &Col<c64>, a: &Mat<c64>, sigma2: f64, ah: f64, bh: f64, iters: usize) -> Col<c64> {
        let n = a.ncols();
        let var0 = y.squared_norm_l2() / a.squared_norm_l2();
        let mut alpha = vec![1.0 / var0; n];
        let mut m = Col::zeros(n);
        let ahy = matvec(a.adjoint(), y.as_ref());
        let gram = matmul(a.adjoint(), a.as_ref());
        for _ in 0..iters {
            let prec = Mat::from_fn(n, n, |i, j| gram[(i, j)] / sigma2 + if i == j { c64::new(alpha[i], 0.0) } else { c64::new(0.0, 0.0) });
            let sigma = invert(&prec);
            m = matvec(sigma.as_ref(), ahy.as_ref()) * faer::Scale(c64::new(1.0 / sigma2, 0.0));
            for i in 0..n {
                alpha[i] = (ah + 1.0) / (bh + m[i].norm_sqr() + sigma[(i, i)].re);
            }
        }
        m
    }

    fn fixed_iters(iters: usize, beta: f64) -> PcsblParams {
        PcsblParams {
            beta,
            max_iters: iters,
            tol: 1e-300,
            ..PcsblParams::default()
        }
    }

    #[test]
    fn uncoupled_matches_sbl_oracle() {
        for (t, seed) in [(12usize, 1u64), (30, 2)] {
            let a = gaussian(t, 20, seed);
            let mut rng = child_rng(seed, "y", 0);
            let y = Col::from_fn(t, |_| complex_normal(&mut rng));
            let want = sbl_oracle(&y, &a, 0.1, 0.5, 1e-4, 15);
            let got = pcsbl_1d(y.as_ref(), a.as_ref(), 0.1, &fixed_iters(15, 0.0)).unwrap();
            let err = rel_err(got.x.as_ref(), want.as_mat());
            assert!(err < 1e-8, "T = {t}: {err}");
            let two = pcsbl_2d(y.as_mat(), a.as_ref(), 0.1, &fixed_iters(15, 0.0)).unwrap();
            assert_eq!(two.x, got.x);
        }
    }

    #[test]
    fn single_column_grid_equals_chain() {
        let a = gaussian(16, 32, 3);
        let mut rng = child_rng(3, "y", 0);
        let y = Col::from_fn(16, |_| complex_normal(&mut rng));
        let one = pcsbl_1d(y.as_ref(), a.as_ref(), 0.05, &PcsblParams::default()).unwrap();
        let two = pcsbl_2d(y.as_mat(), a.as_ref(), 0.05, &PcsblParams::default()).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn woodbury_and_direct_agree() {
        let a = gaussian(10, 24, 4);
        let mut rng = child_rng(4, "y", 0);
        let y = Col::from_fn(10, |_| complex_normal(&mut rng));
        let d: Vec<f64> = (0..24).map(|i| 0.5 + i as f64 * 0.3).collect();
        let (m1, v1) = estep_woodbury(a.as_ref(), y.as_ref(), &d, 0.2).unwrap();
        let gram = matmul(a.adjoint(), a.as_ref());
        let (m2, v2) = estep_direct(gram.as_ref(), a.as_ref(), y.as_ref(), &d, 0.2).unwrap();
        assert!(rel_err(m1.as_mat(), m2.as_mat()) < 1e-10);
        let cov = posterior_covariance(a.as_ref(), &d, 0.2).unwrap();
        for i in 0..24 {
            assert!((v1[i] - v2[i]).abs() < 1e-10 * v2[i]);
            assert!((cov[(i, i)].re - v2[i]).abs() < 1e-10 * v2[i]);
        }
    }

    #[test]
    fn zero_observation_gives_zero_estimate() {
        let a = gaussian(8, 16, 5);
        let y = Mat::<c64>::zeros(8, 3);
        let out = pcsbl_2d(y.as_ref(), a.as_ref(), 0.1, &PcsblParams::default()).unwrap();
        assert_eq!(out.x.norm_l2(), 0.0);
    }

    fn planted(n: usize, p: usize, blocks: &[usize], len: usize, drift: usize, seed: u64) -> Mat<c64> {
        let mut rng = child_rng(seed, "planted", 0);
        let mut x = Mat::zeros(n, p);
        for j in 0..p {
            for &b in blocks {
                for k in 0..len {
                    x[((b + k + j * drift) % n, j)] = complex_normal(&mut rng);
                }
            }
        }
        x
    }

    #[test]
    fn noiseless_block_sparse_is_recovered() {
        let (n, t) = (128, 64);
        let mut ratio = 0.0;
        for seed in 0..5 {
            let a = gaussian(t, n, 10 + seed);
            let x = planted(n, 1, &[16, 72], 8, 0, seed);
            let y = matmul(a.as_ref(), x.as_ref());
            let out = pcsbl_1d(y.col(0), a.as_ref(), 0.0, &PcsblParams::default()).unwrap();
            ratio += (&out.x - &x).squared_norm_l2() / x.squared_norm_l2() / 5.0;
        }
        let db = 10.0 * ratio.log10();
        assert!(db < -40.0, "nmse {db} dB");
    }

    #[test]
    fn grid_coupling_beats_columnwise_on_drifting_support() {
        let (n, t, p) = (96, 30, 8);
        let (mut e1, mut e2) = (0.0, 0.0);
        for seed in 0..6 {
            let a = gaussian(t, n, 20 + seed);
            let x = planted(n, p, &[10, 50], 6, 1, seed);
            let clean = matmul(a.as_ref(), x.as_ref());
            let sigma2 = clean.squared_norm_l2() / (t * p) as f64 / 10.0;
            let mut rng = child_rng(seed, "noise", 0);
            let y = Mat::from_fn(t, p, |i, j| clean[(i, j)] + complex_normal(&mut rng) * sigma2.sqrt());
            let params = PcsblParams {
                max_iters: 100,
                ..PcsblParams::default()
            };
            let one = pcsbl_per_column(y.as_ref(), a.as_ref(), sigma2, &params).unwrap();
            let two = pcsbl_2d(y.as_ref(), a.as_ref(), sigma2, &params).unwrap();
            e1 += (&one.x - &x).squared_norm_l2() / x.squared_norm_l2();
            e2 += (&two.x - &x).squared_norm_l2() / x.squared_norm_l2();
        }
        assert!(e2 < e1, "2d {e2} vs columnwise {e1}");
    }

    #[test]
    fn hyperparameters_stay_positive_and_covariance_is_pd() {
        let (n, t, p) = (128, 48, 4);
        let a = gaussian(t, n, 30);
        let x = planted(n, p, &[0, 40, 100], 8, 1, 30);
        let clean = matmul(a.as_ref(), x.as_ref());
        let mut rng = child_rng(30, "noise", 0);
        let y = Mat::from_fn(t, p, |i, j| clean[(i, j)] + complex_normal(&mut rng) * 0.05);
        let out = pcsbl_2d(y.as_ref(), a.as_ref(), 0.0025, &PcsblParams::default()).unwrap();
        assert!(out.residual.is_finite());
        let nb = neighbor_sum(&out.alpha, Coupling::GRID);
        for j in 0..p {
            for i in 0..n {
                assert!(out.alpha[(i, j)] > 0.0);
            }
        }
        let d: Vec<f64> = (0..n).map(|i| out.alpha[(i, 1)] + nb[(i, 1)]).collect();
        assert!(d.iter().all(|&v| v > 0.0));
        let cov = posterior_covariance(a.as_ref(), &d, out.noise_var).unwrap();
        let herm = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (cov[(i, j)] - cov[(j, i)].conj()).norm()).fold(0.0, f64::max);
        assert!(herm < 1e-10 * cov.norm_l2());
        let eig = cov.self_adjoint_eigenvalues(Side::Lower).unwrap();
        assert!(eig[0] > 0.0);
    }

    #[test]
    fn em_noise_estimate_is_reasonable() {
        let (n, t, p) = (64, 48, 6);
        let a = gaussian(t, n, 40);
        let x = planted(n, p, &[8], 6, 1, 40);
        let clean = matmul(a.as_ref(), x.as_ref());
        let truth: f64 = 0.01;
        let mut rng = child_rng(40, "noise", 0);
        let y = Mat::from_fn(t, p, |i, j| clean[(i, j)] + complex_normal(&mut rng) * truth.sqrt());
        let params = PcsblParams {
            noise_mode: NoiseMode::Em,
            ..PcsblParams::default()
        };
        let out = pcsbl_2d(y.as_ref(), a.as_ref(), 1.0, &params).unwrap();
        assert!(out.noise_var > truth / 3.0 && out.noise_var < truth * 3.0, "{}", out.noise_var);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let a = gaussian(8, 16, 50);
        let y = Col::from_fn(8, |i| c64::new(i as f64, 1.0));
        let out = pcsbl_1d(y.as_ref(), a.as_ref(), 0.1, &fixed_iters(3, 1.0)).unwrap();
        assert_eq!(out.iterations, 3);
        assert!(!out.converged);
    }

    #[test]
    fn rejects_bad_params() {
        let a = gaussian(4, 8, 60);
        let y = Col::<c64>::zeros(4);
        for params in [
            PcsblParams { beta: 1.5, ..PcsblParams::default() },
            PcsblParams { tol: 0.0, ..PcsblParams::default() },
            PcsblParams { max_iters: 0, ..PcsblParams::default() },
        ] {
            assert!(pcsbl_1d(y.as_ref(), a.as_ref(), 0.1, &params).is_err());
        }
        let mut bad = Col::<c64>::zeros(4);
        bad[1] = c64::new(f64::INFINITY, 0.0);
        assert!(pcsbl_1d(bad.as_ref(), a.as_ref(), 0.1, &PcsblParams::default()).is_err());
    }
}
