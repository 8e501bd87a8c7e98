//! Transform dictionaries for the cascaded channel.
//!
//! The per-subcarrier factor is `Theta_{N,p} = diag(d^*(mu, f_p)) U / sqrt(N)`
//! where `U` is the 2D-DFT over the RIS. Evaluated at the carrier it yields the
//! unified dictionary `E_mu = sqrt(N) V_c^* ⊗ Theta_{N,c}`, which is unitary and
//! shared by all subcarriers.

mod aggregation;
mod energy;
mod freqmap;
mod polar;

use faer::{Col, Mat, MatRef};

pub use aggregation::AggregationMap;
pub use energy::{block_energies, blocks_for_fraction, default_block_size, peak_block};
pub use freqmap::FrequencyMap;
pub use polar::{PolarConfig, PolarGrid};

use crate::c64;
use crate::channel::{ArrayGeometry, Direction, MuProfile};
use crate::config::{field_boundaries, SystemConfig};
use crate::error::{ensure_dim, Result};
use crate::linalg::{cis, kron, matmul, scale_rows, transposed_khatri_rao};

/// Unitary DFT, entry `(a, b) = exp(-j 2 pi a b / n) / sqrt(n)`.
pub fn dft_matrix(n: usize) -> Mat<c64> {
    let norm = 1.0 / (n as f64).sqrt();
    Mat::from_fn(n, n, |a, b| {
        // reduce before scaling to keep the phase argument small
        let ab = (a * b) % n;
        cis(-2.0 * std::f64::consts::PI * ab as f64 / n as f64) * norm
    })
}

/// 2D-DFT over an `n_y x n_z` array, `U_{n_y} ⊗ U_{n_z}` under the
/// `n_y * N_z + n_z` element ordering.
pub fn dft2_matrix(n_y: usize, n_z: usize) -> Mat<c64> {
    kron(dft_matrix(n_y).as_ref(), dft_matrix(n_z).as_ref())
}

/// `D_p = diag(d(mu, k)) U`.
pub fn modified_dict(geom: &ArrayGeometry, mu: &MuProfile, k: f64) -> Mat<c64> {
    let d = mu.quadratic_vector(k, geom.spacing);
    scale_rows(d.as_ref(), dft2_matrix(geom.n_y, geom.n_z).as_ref())
}

/// Representative factor `Theta_{N,p} = diag(d^*(mu, k)) U / sqrt(N)`, the
/// first `N` columns of [`theta_full`].
pub fn theta_rep(geom: &ArrayGeometry, mu: &MuProfile, k: f64) -> Mat<c64> {
    let n = geom.n_ris();
    let s = 1.0 / (n as f64).sqrt();
    let d = mu.quadratic_vector(k, geom.spacing);
    let dc = Col::from_fn(n, |i| d[i].conj() * s);
    scale_rows(dc.as_ref(), dft2_matrix(geom.n_y, geom.n_z).as_ref())
}

/// Full `Theta_p = diag(d^*(mu, k)) (U^* • U)` of size `N x N^2`.
///
/// Cubic in `N`; meant for verification on small arrays.
pub fn theta_full(geom: &ArrayGeometry, mu: &MuProfile, k: f64) -> Mat<c64> {
    let u = dft2_matrix(geom.n_y, geom.n_z);
    let uc = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)].conj());
    let kr = transposed_khatri_rao(uc.as_ref(), u.as_ref()).expect("square factors share rows");
    let d = mu.quadratic_vector(k, geom.spacing);
    let dc = Col::from_fn(d.nrows(), |i| d[i].conj());
    scale_rows(dc.as_ref(), kr.as_ref())
}

/// Reference profile used by the unified dictionary: broadside at the
/// geometric mean of the near-field interval.
pub fn default_mu_ref(cfg: &SystemConfig) -> Result<(f64, MuProfile)> {
    let b = field_boundaries(cfg);
    let [lo, hi] = cfg.ue_distance_range_m.unwrap_or([b.fresnel_m, b.rayleigh_m]);
    let r_ref = (lo * hi).sqrt();
    let geom = ArrayGeometry::from_config(cfg);
    Ok((r_ref, MuProfile::from_range(&geom, r_ref, Direction { psi_a: 0.0, psi_e: 0.0 })?))
}

/// Frequency-independent dictionary `E_mu` with its factors.
#[derive(Debug, Clone)]
pub struct UnifiedDictionary {
    pub geometry: ArrayGeometry,
    /// `E_mu`, `(N N_t) x (N N_t)`, unitary.
    pub e_mu: Mat<c64>,
    /// `Theta_{N,c}`.
    pub theta_rep: Mat<c64>,
    /// BS DFT `V_c`.
    pub v_c: Mat<c64>,
    pub mu_ref: MuProfile,
}

impl UnifiedDictionary {
    pub fn new(geom: ArrayGeometry, mu_ref: MuProfile, carrier_k: f64) -> Result<Self> {
        ensure_dim("mu profile length", geom.n_ris(), mu_ref.len())?;
        let theta = theta_rep(&geom, &mu_ref, carrier_k);
        let v_c = dft_matrix(geom.n_t);
        let v_conj = Mat::from_fn(geom.n_t, geom.n_t, |i, j| v_c[(i, j)].conj());
        let s = (geom.n_ris() as f64).sqrt();
        let mut e_mu = kron(v_conj.as_ref(), theta.as_ref());
        for j in 0..e_mu.ncols() {
            for i in 0..e_mu.nrows() {
                e_mu[(i, j)] *= s;
            }
        }
        Ok(UnifiedDictionary {
            geometry: geom,
            e_mu,
            theta_rep: theta,
            v_c,
            mu_ref,
        })
    }

    /// Dictionary with the default reference profile at the carrier.
    pub fn for_config(cfg: &SystemConfig) -> Result<Self> {
        let (_, mu) = default_mu_ref(cfg)?;
        Self::new(ArrayGeometry::from_config(cfg), mu, cfg.carrier_wavenumber())
    }

    pub fn dim(&self) -> usize {
        self.e_mu.nrows()
    }

    fn sqrt_n(&self) -> f64 {
        (self.geometry.n_ris() as f64).sqrt()
    }

    /// `X = sqrt(N) E_mu^H H`, column by column.
    pub fn analyze(&self, h: MatRef<'_, c64>) -> Result<SparseCoefficients> {
        ensure_dim("channel rows", self.dim(), h.nrows())?;
        let mut x = matmul(self.e_mu.adjoint(), h);
        let s = self.sqrt_n();
        x.as_mut().col_iter_mut().for_each(|c| c.iter_mut().for_each(|v| *v *= s));
        Ok(SparseCoefficients {
            x_tilde: x,
            block_size: default_block_size(self.geometry.n_ris()),
        })
    }

    /// `H = E_mu X / sqrt(N)`.
    pub fn reconstruct(&self, x: MatRef<'_, c64>) -> Result<Mat<c64>> {
        ensure_dim("coefficient rows", self.dim(), x.nrows())?;
        let mut h = matmul(self.e_mu.as_ref(), x);
        let s = 1.0 / self.sqrt_n();
        h.as_mut().col_iter_mut().for_each(|c| c.iter_mut().for_each(|v| *v *= s));
        Ok(h)
    }
}

/// Coefficients of the stacked channel in the unified dictionary.
#[derive(Debug, Clone)]
pub struct SparseCoefficients {
    /// `(N N_t) x P`.
    pub x_tilde: Mat<c64>,
    /// Block length along the coefficient axis.
    pub block_size: usize,
}

impl SparseCoefficients {
    /// Block energies of column `p`.
    pub fn block_energies(&self, p: usize) -> Vec<f64> {
        block_energies(self.x_tilde.col(p), self.block_size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{child_rng, subcarrier_grid};
    use crate::linalg::{max_abs_diff, rel_err, unitarity_defect};
    use rand::Rng;

    fn small_geom() -> ArrayGeometry {
        ArrayGeometry {
            n_t: 2,
            n_y: 4,
            n_z: 2,
            spacing: 1.5e-3,
        }
    }

    #[test]
    fn dft_small_cases() {
        assert_eq!(dft_matrix(1)[(0, 0)], c64::new(1.0, 0.0));
        let u = dft_matrix(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [[h, h], [h, -h]];
        for a in 0..2 {
            for b in 0..2 {
                assert!((u[(a, b)] - c64::new(want[a][b], 0.0)).norm() < 1e-15);
            }
        }
        assert!(unitarity_defect(dft_matrix(8).as_ref()) < 1e-14);
    }

    #[test]
    fn dft2_structure() {
        let u = dft2_matrix(1, 5);
        assert!(max_abs_diff(u.as_ref(), dft_matrix(5).as_ref()) < 1e-15);
        let (ny, nz) = (4, 2);
        let u = dft2_matrix(ny, nz);
        assert!(unitarity_defect(u.as_ref()) < 1e-14);
        let n = (ny * nz) as f64;
        for qy in 0..ny {
            for qz in 0..nz {
                let col = qy * nz + qz;
                for y in 0..ny {
                    for z in 0..nz {
                        let phase = -2.0
                            * std::f64::consts::PI
                            * ((y * qy) as f64 / ny as f64 + (z * qz) as f64 / nz as f64);
                        let want = cis(phase) / n.sqrt();
                        assert!((u[(y * nz + z, col)] - want).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn modified_dictionary_properties() {
        let geom = small_geom();
        let k = 2.0 * std::f64::consts::PI / 3e-3;
        let far = modified_dict(&geom, &MuProfile::far_field(8), k);
        assert!(max_abs_diff(far.as_ref(), dft2_matrix(4, 2).as_ref()) < 1e-15);

        let mu = MuProfile::from_range(&geom, 0.02, Direction::from_angles(0.4, -0.3)).unwrap();
        let dp = modified_dict(&geom, &mu, k);
        assert!(unitarity_defect(dp.as_ref()) < 1e-12);
        let d = mu.quadratic_vector(k, geom.spacing);
        let u = dft2_matrix(4, 2);
        for q in 0..8 {
            for i in 0..8 {
                assert!((dp[(i, q)] - d[i] * u[(i, q)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn theta_rep_is_first_block_of_full_theta() {
        let geom = small_geom();
        let k = 2.0 * std::f64::consts::PI / 3e-3;
        let mu = MuProfile::from_range(&geom, 0.03, Direction::from_angles(-0.2, 0.6)).unwrap();
        let full = theta_full(&geom, &mu, k);
        let rep = theta_rep(&geom, &mu, k);
        assert_eq!(full.ncols(), 64);
        assert!(max_abs_diff(full.as_ref().subcols(0, 8), rep.as_ref()) < 1e-14);

        let mut scaled = rep.clone();
        scaled.as_mut().col_iter_mut().for_each(|c| c.iter_mut().for_each(|v| *v *= 8f64.sqrt()));
        assert!(unitarity_defect(scaled.as_ref()) < 1e-12);

        let far = theta_rep(&geom, &MuProfile::far_field(8), k);
        let u = dft2_matrix(4, 2);
        for j in 0..8 {
            for i in 0..8 {
                assert!((far[(i, j)] - u[(i, j)] / 8f64.sqrt()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn unified_dictionary_roundtrip() {
        let cfg = SystemConfig::desk();
        let dict = UnifiedDictionary::for_config(&cfg).unwrap();
        assert_eq!(dict.dim(), 128);
        assert!(unitarity_defect(dict.e_mu.as_ref()) < 1e-10);

        let grid = subcarrier_grid(&cfg).unwrap();
        let mut rng = child_rng(5, "test", 0);
        let ch = crate::channel::ChannelRealization::synthesize(&cfg, &grid, &mut rng).unwrap();
        let coeffs = dict.analyze(ch.cascaded.as_ref()).unwrap();
        let back = dict.reconstruct(coeffs.x_tilde.as_ref()).unwrap();
        assert!(rel_err(back.as_ref(), ch.cascaded.as_ref()) < 1e-12);

        let zero = Mat::<c64>::zeros(128, 3);
        let z = dict.analyze(zero.as_ref()).unwrap();
        assert_eq!(z.x_tilde.norm_l2(), 0.0);

        let bad = Mat::<c64>::zeros(127, 3);
        assert!(dict.analyze(bad.as_ref()).is_err());
        assert!(dict.reconstruct(bad.as_ref()).is_err());
    }

    #[test]
    fn single_bs_antenna_reduces_to_theta() {
        let geom = ArrayGeometry {
            n_t: 1,
            ..small_geom()
        };
        let mu = MuProfile::from_range(&geom, 0.05, Direction::from_angles(0.0, 0.0)).unwrap();
        let k = 2.0 * std::f64::consts::PI / 3e-3;
        let dict = UnifiedDictionary::new(geom, mu.clone(), k).unwrap();
        let theta = theta_rep(&geom, &mu, k);
        for j in 0..8 {
            for i in 0..8 {
                assert!((dict.e_mu[(i, j)] - theta[(i, j)] * 8f64.sqrt()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn random_coefficients_roundtrip() {
        let cfg = SystemConfig::desk();
        let dict = UnifiedDictionary::for_config(&cfg).unwrap();
        let mut rng = child_rng(6, "test", 0);
        let x = Mat::from_fn(128, 4, |_, _| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = dict.reconstruct(x.as_ref()).unwrap();
        let back = dict.analyze(h.as_ref()).unwrap();
        assert!(rel_err(back.x_tilde.as_ref(), x.as_ref()) < 1e-12);
    }
}
