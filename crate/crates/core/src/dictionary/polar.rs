use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::channel::{ArrayGeometry, Direction, SteeringMode};
use crate::config::{field_boundaries, SystemConfig};
use crate::dictionary::dft_matrix;
use crate::error::{Error, Result};
use crate::linalg::kron;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarConfig {
    /// Distance rings per angle, including the far-field ring.
    pub rings: usize,
    /// Ring spacing factor: ring `s >= 1` sits at `gamma * R / s`.
    pub gamma: f64,
}

impl Default for PolarConfig {
    fn default() -> Self {
        PolarConfig { rings: 4, gamma: 1.0 }
    }
}

/// Polar-domain grid of near-field atoms at the carrier frequency.
///
/// Angles form a uniform grid of direction cosines, `N_z` samples of `psi_a`
/// and `N_y` of `psi_e`, each `-1 + 2q/Q`. Atom `s * N + (q_y * N_z + q_z)` is
/// the Fresnel near-field response at ring `s`; ring 0 is the far-field
/// response.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub psi_a: Vec<f64>,
    pub psi_e: Vec<f64>,
    /// Ring ranges; `f64::INFINITY` for ring 0.
    pub ranges: Vec<f64>,
    /// `N x (N S)`, unit-norm columns.
    pub atoms: Mat<c64>,
}

fn cosine_grid(q: usize) -> Vec<f64> {
    (0..q).map(|i| -1.0 + 2.0 * i as f64 / q as f64).collect()
}

impl PolarGrid {
    pub fn new(cfg: &SystemConfig, polar: PolarConfig) -> Result<Self> {
        if polar.rings == 0 || !(polar.gamma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "polar grid needs rings >= 1 and gamma > 0, got {} and {}",
                polar.rings, polar.gamma
            )));
        }
        let geom = ArrayGeometry::from_config(cfg);
        let k = cfg.carrier_wavenumber();
        let n = geom.n_ris();
        let rayleigh = field_boundaries(cfg).rayleigh_m;
        let ranges: Vec<f64> = (0..polar.rings)
            .map(|s| {
                if s == 0 {
                    f64::INFINITY
                } else {
                    rayleigh * polar.gamma / s as f64
                }
            })
            .collect();
        let psi_a = cosine_grid(geom.n_z);
        let psi_e = cosine_grid(geom.n_y);
        let mut atoms = Mat::<c64>::zeros(n, n * polar.rings);
        for (s, &r) in ranges.iter().enumerate() {
            for qy in 0..geom.n_y {
                for qz in 0..geom.n_z {
                    let dir = Direction {
                        psi_a: psi_a[qz],
                        psi_e: psi_e[qy],
                    };
                    let atom = if r.is_infinite() {
                        geom.ris_far_field(dir, k)
                    } else {
                        geom.nf_steering(dir, k, r, SteeringMode::Fresnel)?
                    };
                    let col = s * n + qy * geom.n_z + qz;
                    for i in 0..n {
                        atoms[(i, col)] = atom[i];
                    }
                }
            }
        }
        Ok(PolarGrid {
            psi_a,
            psi_e,
            ranges,
            atoms,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.ncols()
    }

    /// Basis for `vec(H_p)`: `V_c^* ⊗ conj(atoms)`.
    ///
    /// A cascaded column is `b(theta) ∘ c^*(phi, r)`, i.e. a conjugated
    /// near-field response, hence the conjugated atoms.
    pub fn cascaded_basis(&self, n_t: usize) -> Mat<c64> {
        let v = dft_matrix(n_t);
        let vc = Mat::from_fn(n_t, n_t, |i, j| v[(i, j)].conj());
        let ac = Mat::from_fn(self.atoms.nrows(), self.atoms.ncols(), |i, j| self.atoms[(i, j)].conj());
        kron(vc.as_ref(), ac.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ring_is_angular_dictionary() {
        let cfg = SystemConfig::desk();
        let g = PolarGrid::new(&cfg, PolarConfig { rings: 1, gamma: 1.0 }).unwrap();
        assert_eq!(g.n_atoms(), 64);
        // half-wavelength spacing on the -1 + 2q/Q grid gives an orthonormal set
        assert!(crate::linalg::unitarity_defect(g.atoms.as_ref()) < 1e-12);
    }

    #[test]
    fn atoms_are_unit_norm_and_ring_zero_is_far_field() {
        let cfg = SystemConfig::desk();
        let g = PolarGrid::new(&cfg, PolarConfig::default()).unwrap();
        assert_eq!(g.n_atoms(), 256);
        for j in 0..g.n_atoms() {
            assert!((g.atoms.col(j).norm_l2() - 1.0).abs() < 1e-12);
        }
        let geom = ArrayGeometry::from_config(&cfg);
        let dir = Direction {
            psi_a: g.psi_a[1],
            psi_e: g.psi_e[5],
        };
        let b = geom.ris_far_field(dir, cfg.carrier_wavenumber());
        let col = 5 * cfg.n_z + 1;
        for i in 0..64 {
            assert!((g.atoms[(i, col)] - b[i]).norm() < 1e-15);
        }
        let r = field_boundaries(&cfg).rayleigh_m;
        assert_eq!(g.ranges[1], r);
        assert!((g.ranges[3] - r / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cascaded_basis_shape() {
        let cfg = SystemConfig::desk();
        let g = PolarGrid::new(&cfg, PolarConfig { rings: 2, gamma: 1.0 }).unwrap();
        let basis = g.cascaded_basis(cfg.n_t);
        assert_eq!((basis.nrows(), basis.ncols()), (128, 256));
        for j in 0..basis.ncols() {
            assert!((basis.col(j).norm_l2() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_empty_grid() {
        let cfg = SystemConfig::desk();
        assert!(PolarGrid::new(&cfg, PolarConfig { rings: 0, gamma: 1.0 }).is_err());
        assert!(PolarGrid::new(&cfg, PolarConfig { rings: 2, gamma: 0.0 }).is_err());
    }
}
