//! Pilot schedules, sensing matrices and noisy observations.
//!
//! With `x_p(t) = 1` the observation on subcarrier `p` is
//! `y_p = C^T vec(H_p) + n_p` where column `t` of `C` is `f(t) ⊗ s(t)`. The same
//! schedule serves every subcarrier.

use std::f64::consts::PI;

use faer::{Mat, MatRef};
use rand::Rng;

use crate::c64;
use crate::channel::ArrayGeometry;
use crate::dictionary::UnifiedDictionary;
use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{cis, complex_normal, matmul};

/// RIS reflection patterns and BS precoders for `T` training instants.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSchedule {
    /// `N x T`, unit-modulus entries.
    pub reflections: Mat<c64>,
    /// `N_t x T`.
    pub precoders: Mat<c64>,
}

impl PilotSchedule {
    pub fn len(&self) -> usize {
        self.reflections.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Random pilots: precoders i.i.d. CN(0, 1), reflection phases i.i.d. uniform.
///
/// Instants are drawn in order, so a schedule of length `T` is a prefix of any
/// longer schedule drawn from the same generator state.
pub fn gen_pilots<R: Rng + ?Sized>(geom: &ArrayGeometry, t: usize, rng: &mut R) -> Result<PilotSchedule> {
    if t == 0 {
        return Err(Error::InvalidConfig("pilot length must be at least 1".into()));
    }
    let mut reflections = Mat::zeros(geom.n_ris(), t);
    let mut precoders = Mat::zeros(geom.n_t, t);
    for col in 0..t {
        for i in 0..geom.n_t {
            precoders[(i, col)] = complex_normal(rng);
        }
        for i in 0..geom.n_ris() {
            reflections[(i, col)] = cis(rng.random_range(0.0..2.0 * PI));
        }
    }
    Ok(PilotSchedule {
        reflections,
        precoders,
    })
}

/// `C`, `(N N_t) x T` with column `t = f(t) ⊗ s(t)`.
pub fn sensing_matrix(pilots: &PilotSchedule) -> Mat<c64> {
    let n = pilots.reflections.nrows();
    let s = &pilots.reflections;
    let f = &pilots.precoders;
    Mat::from_fn(n * f.nrows(), pilots.len(), |row, t| f[(row / n, t)] * s[(row % n, t)])
}

/// `Omega = C^T E_mu / sqrt(N)`.
pub fn equivalent_matrix(c: MatRef<'_, c64>, dict: &UnifiedDictionary) -> Result<Mat<c64>> {
    ensure_dim("sensing matrix rows", dict.dim(), c.nrows())?;
    let mut omega = matmul(c.transpose(), dict.e_mu.as_ref());
    let s = 1.0 / (dict.geometry.n_ris() as f64).sqrt();
    omega
        .as_mut()
        .col_iter_mut()
        .for_each(|col| col.iter_mut().for_each(|v| *v *= s));
    Ok(omega)
}

/// Noise-free observations `C^T H`.
pub fn noiseless_observations(h: MatRef<'_, c64>, c: MatRef<'_, c64>) -> Result<Mat<c64>> {
    ensure_dim("sensing matrix rows", h.nrows(), c.nrows())?;
    Ok(matmul(c.transpose(), h))
}

#[derive(Debug, Clone)]
pub struct ObservationSet {
    pub c_matrix: Mat<c64>,
    pub omega: Mat<c64>,
    /// `T x P`.
    pub y: Mat<c64>,
    pub noise_var: f64,
    pub snr_db: f64,
}

impl ObservationSet {
    pub fn new<R: Rng + ?Sized>(
        h: MatRef<'_, c64>,
        pilots: &PilotSchedule,
        dict: &UnifiedDictionary,
        snr_db: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let c_matrix = sensing_matrix(pilots);
        let omega = equivalent_matrix(c_matrix.as_ref(), dict)?;
        let (y, noise_var) = synthesize_observations(h, c_matrix.as_ref(), snr_db, rng)?;
        Ok(ObservationSet {
            c_matrix,
            omega,
            y,
            noise_var,
            snr_db,
        })
    }

    pub fn pilot_len(&self) -> usize {
        self.y.nrows()
    }
}

/// `Y = C^T H + N` with `sigma^2 = ||C^T H||_F^2 / (T P) / 10^(snr/10)`.
///
/// Returns `Y` and `sigma^2`. Noise is drawn instant by instant (all
/// subcarriers of instant `t` before instant `t + 1`), matching the prefix
/// property of [`gen_pilots`]. `snr_db = +inf` gives noise-free data.
pub fn synthesize_observations<R: Rng + ?Sized>(
    h: MatRef<'_, c64>,
    c: MatRef<'_, c64>,
    snr_db: f64,
    rng: &mut R,
) -> Result<(Mat<c64>, f64)> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::NonFinite("snr_db"));
    }
    let mut y = noiseless_observations(h, c)?;
    let (t, p) = (y.nrows(), y.ncols());
    if t * p == 0 {
        return Ok((y, 0.0));
    }
    let signal = y.squared_norm_l2() / (t * p) as f64;
    let noise_var = if snr_db.is_infinite() {
        0.0
    } else {
        signal / 10f64.powf(snr_db / 10.0)
    };
    if noise_var > 0.0 {
        let sigma = noise_var.sqrt();
        for row in 0..t {
            for col in 0..p {
                y[(row, col)] += complex_normal(rng) * sigma;
            }
        }
    }
    Ok((y, noise_var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{child_rng, subcarrier_grid, SystemConfig};
    use crate::linalg::{kron, max_abs_diff, rel_err};
    use crate::channel::ChannelRealization;

    fn geom() -> ArrayGeometry {
        ArrayGeometry::from_config(&SystemConfig::desk())
    }

    #[test]
    fn reflections_are_unit_modulus() {
        let mut rng = child_rng(1, "pilots", 0);
        let p = gen_pilots(&geom(), 40, &mut rng).unwrap();
        for t in 0..40 {
            for i in 0..64 {
                assert!((p.reflections[(i, t)].norm() - 1.0).abs() < 1e-15);
            }
        }
        assert!(gen_pilots(&geom(), 0, &mut rng).is_err());
    }

    #[test]
    fn pilots_are_prefix_consistent() {
        let a = gen_pilots(&geom(), 10, &mut child_rng(4, "pilots", 0)).unwrap();
        let b = gen_pilots(&geom(), 25, &mut child_rng(4, "pilots", 0)).unwrap();
        assert_eq!(a.reflections.as_ref(), b.reflections.as_ref().subcols(0, 10));
        assert_eq!(a.precoders.as_ref(), b.precoders.as_ref().subcols(0, 10));
    }

    #[test]
    fn precoder_variance_is_unit() {
        let g = ArrayGeometry {
            n_t: 4,
            n_y: 1,
            n_z: 1,
            spacing: 1.0,
        };
        let mut rng = child_rng(2, "pilots", 0);
        let p = gen_pilots(&g, 5000, &mut rng).unwrap();
        let var = p.precoders.squared_norm_l2() / 20_000.0;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn sensing_columns_are_kronecker_products() {
        let mut rng = child_rng(3, "pilots", 0);
        let p = gen_pilots(&geom(), 6, &mut rng).unwrap();
        let c = sensing_matrix(&p);
        for t in 0..6 {
            let f = p.precoders.as_ref().subcols(t, 1);
            let s = p.reflections.as_ref().subcols(t, 1);
            let k = kron(f, s);
            assert!(max_abs_diff(k.as_ref(), c.as_ref().subcols(t, 1)) == 0.0);
        }
    }

    #[test]
    fn single_instant_selects_first_antenna() {
        let g = geom();
        let p = PilotSchedule {
            reflections: Mat::from_fn(64, 1, |_, _| c64::new(1.0, 0.0)),
            precoders: Mat::from_fn(2, 1, |i, _| c64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)),
        };
        let c = sensing_matrix(&p);
        for row in 0..128 {
            let want = if row < g.n_ris() { 1.0 } else { 0.0 };
            assert_eq!(c[(row, 0)], c64::new(want, 0.0));
        }
    }

    #[test]
    fn physical_and_sparse_pathways_agree() {
        let cfg = SystemConfig::desk();
        let grid = subcarrier_grid(&cfg).unwrap();
        let dict = UnifiedDictionary::for_config(&cfg).unwrap();
        let ch = ChannelRealization::synthesize(&cfg, &grid, &mut child_rng(5, "channel", 0)).unwrap();
        let pilots = gen_pilots(&dict.geometry, 48, &mut child_rng(5, "pilots", 0)).unwrap();
        let obs = ObservationSet::new(ch.cascaded.as_ref(), &pilots, &dict, f64::INFINITY, &mut child_rng(5, "noise", 0))
            .unwrap();
        assert_eq!((obs.omega.nrows(), obs.omega.ncols()), (48, 128));
        assert_eq!(obs.noise_var, 0.0);
        let x = dict.analyze(ch.cascaded.as_ref()).unwrap().x_tilde;
        let via_sparse = matmul(obs.omega.as_ref(), x.as_ref());
        assert!(rel_err(via_sparse.as_ref(), obs.y.as_ref()) < 1e-10);
    }

    #[test]
    fn realized_snr_matches_target() {
        let cfg = SystemConfig::desk();
        let grid = subcarrier_grid(&cfg).unwrap();
        let ch = ChannelRealization::synthesize(&cfg, &grid, &mut child_rng(6, "channel", 0)).unwrap();
        let pilots = gen_pilots(&geom(), 700, &mut child_rng(6, "pilots", 0)).unwrap();
        let c = sensing_matrix(&pilots);
        let clean = noiseless_observations(ch.cascaded.as_ref(), c.as_ref()).unwrap();
        let (y, var) = synthesize_observations(ch.cascaded.as_ref(), c.as_ref(), 10.0, &mut child_rng(6, "noise", 0)).unwrap();
        let noise = &y - &clean;
        let n = (700 * 16) as f64;
        let realized = 10.0 * (clean.squared_norm_l2() / noise.squared_norm_l2()).log10();
        assert!((realized - 10.0).abs() < 0.5, "realized {realized}");
        let re: f64 = noise.as_ref().col_iter().flat_map(|c| c.iter().map(|v| v.re * v.re).collect::<Vec<_>>()).sum();
        let im: f64 = noise.as_ref().col_iter().flat_map(|c| c.iter().map(|v| v.im * v.im).collect::<Vec<_>>()).sum();
        assert!((re / n / (var / 2.0) - 1.0).abs() < 0.05);
        assert!((im / n / (var / 2.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn same_seed_same_observations() {
        let cfg = SystemConfig::desk();
        let grid = subcarrier_grid(&cfg).unwrap();
        let ch = ChannelRealization::synthesize(&cfg, &grid, &mut child_rng(7, "channel", 0)).unwrap();
        let c = sensing_matrix(&gen_pilots(&geom(), 20, &mut child_rng(7, "pilots", 0)).unwrap());
        let a = synthesize_observations(ch.cascaded.as_ref(), c.as_ref(), 5.0, &mut child_rng(7, "noise", 0)).unwrap();
        let b = synthesize_observations(ch.cascaded.as_ref(), c.as_ref(), 5.0, &mut child_rng(7, "noise", 0)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.to_bits(), b.1.to_bits());
        assert!(synthesize_observations(ch.cascaded.as_ref(), c.as_ref(), f64::NAN, &mut child_rng(7, "noise", 0)).is_err());
    }
}
