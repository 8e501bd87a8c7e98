//! Small dense helpers on top of `faer`.

use faer::linalg::solvers::Llt;
use faer::traits::Conjugate;
use faer::{Accum, Col, ColRef, Mat, MatRef, Par, Side};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::c64;
use crate::error::{Error, Result};

#[inline]
pub fn cis(phase: f64) -> c64 {
    let (s, c) = phase.sin_cos();
    c64::new(c, s)
}

/// Circularly symmetric complex Gaussian sample with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `a * b`; either operand may be a conjugated view such as `m.adjoint()`.
pub fn matmul<L, R>(a: MatRef<'_, L>, b: MatRef<'_, R>) -> Mat<c64>
where
    L: Conjugate<Canonical = c64>,
    R: Conjugate<Canonical = c64>,
{
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    faer::linalg::matmul::matmul(&mut out, Accum::Replace, a, b, c64::new(1.0, 0.0), Par::Seq);
    out
}

pub fn matvec<L, R>(a: MatRef<'_, L>, x: ColRef<'_, R>) -> Col<c64>
where
    L: Conjugate<Canonical = c64>,
    R: Conjugate<Canonical = c64>,
{
    let mut out = Col::zeros(a.nrows());
    faer::linalg::matmul::matmul(&mut out, Accum::Replace, a, x, c64::new(1.0, 0.0), Par::Seq);
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    faer::linalg::kron::kron(out.as_mut(), a, b);
    out
}

/// Transposed Khatri-Rao (face-splitting) product: row `i` of the result is
/// `a[i, :] ⊗ b[i, :]`, so column `k * b.ncols() + l` equals `a[:, k] ∘ b[:, l]`.
pub fn transposed_khatri_rao(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<Mat<c64>> {
    crate::error::ensure_dim("transposed Khatri-Rao rows", a.nrows(), b.nrows())?;
    let nb = b.ncols();
    Ok(Mat::from_fn(a.nrows(), a.ncols() * nb, |i, j| {
        a[(i, j / nb)] * b[(i, j % nb)]
    }))
}

/// `diag(d) * m`.
pub fn scale_rows(d: ColRef<'_, c64>, m: MatRef<'_, c64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)])
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// `||a - b||_F / ||b||_F`, or the absolute error when `b` vanishes.
pub fn rel_err(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let diff = (a - b).norm_l2();
    let base = b.norm_l2();
    if base > 0.0 {
        diff / base
    } else {
        diff
    }
}

/// `max |m^H m - I|`.
pub fn unitarity_defect(m: MatRef<'_, c64>) -> f64 {
    let g = matmul(m.adjoint(), m);
    let eye = Mat::<c64>::identity(m.ncols(), m.ncols());
    max_abs_diff(g.as_ref(), eye.as_ref())
}

/// Cholesky factor of a Hermitian positive definite matrix (lower triangle
/// is read).
pub fn cholesky(m: MatRef<'_, c64>) -> Result<Llt<c64>> {
    m.llt(Side::Lower)
        .map_err(|e| Error::Numerical(format!("cholesky failed: {e:?}")))
}

pub fn all_finite(m: MatRef<'_, c64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

/// Column-major flattening of `m`.
pub fn vec_of(m: MatRef<'_, c64>) -> Col<c64> {
    let r = m.nrows();
    Col::from_fn(r * m.ncols(), |k| m[(k % r, k / r)])
}

/// Inverse of [`vec_of`].
pub fn unvec(v: ColRef<'_, c64>, rows: usize, cols: usize) -> Mat<c64> {
    assert_eq!(v.nrows(), rows * cols);
    Mat::from_fn(rows, cols, |i, j| v[j * rows + i])
}

/// Serde adapter storing a complex number as `[re, im]`.
pub mod serde_complex {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::c64;

    pub fn serialize<S: Serializer>(z: &c64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<c64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(c64::new(re, im))
    }
}
