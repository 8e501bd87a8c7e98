//! Array responses: BS ULA, RIS far-field UPA, and RIS near-field responses
//! built either from exact element distances or from their second-order
//! (Fresnel) expansion.

use std::f64::consts::PI;

use faer::Col;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::linalg::cis;

pub fn wavenumber(freq_hz: f64) -> f64 {
    2.0 * PI * freq_hz / SPEED_OF_LIGHT
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SteeringMode {
    /// Exact spherical-wave element distances.
    #[default]
    Exact,
    /// Second-order expansion, separable into far-field and quadratic parts.
    Fresnel,
}

/// Direction cosines seen by the RIS: `psi_a = sin(az)`,
/// `psi_e = cos(az) sin(el)`.
///
/// Frequency normalization can push them outside `[-1, 1]`, so responses
/// are parameterized by the cosines rather than by angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub psi_a: f64,
    pub psi_e: f64,
}

impl Direction {
    pub fn from_angles(azimuth: f64, elevation: f64) -> Self {
        Direction {
            psi_a: azimuth.sin(),
            psi_e: azimuth.cos() * elevation.sin(),
        }
    }

    pub fn scaled(self, eta: f64) -> Self {
        Direction {
            psi_a: self.psi_a * eta,
            psi_e: self.psi_e * eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub n_t: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub spacing: f64,
}

impl ArrayGeometry {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        ArrayGeometry {
            n_t: cfg.n_t,
            n_y: cfg.n_y,
            n_z: cfg.n_z,
            spacing: cfg.spacing(),
        }
    }

    pub fn n_ris(&self) -> usize {
        self.n_y * self.n_z
    }

    /// `(n_y, n_z)` of flat element index `idx`.
    #[inline]
    pub fn element(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_z, idx % self.n_z)
    }

    /// BS response `a(vartheta)`, entry `n = exp(j k n d sin(vartheta)) / sqrt(N_t)`.
    pub fn bs_steering(&self, aod: f64, k: f64) -> Col<c64> {
        self.bs_steering_sin(aod.sin(), k)
    }

    pub fn bs_steering_sin(&self, sin_aod: f64, k: f64) -> Col<c64> {
        let norm = 1.0 / (self.n_t as f64).sqrt();
        Col::from_fn(self.n_t, |n| cis(k * n as f64 * self.spacing * sin_aod) * norm)
    }

    /// RIS far-field response `b`, entry `(n_y, n_z) =
    /// exp(j k d (n_z psi_a + n_y psi_e)) / sqrt(N)`.
    pub fn ris_far_field(&self, dir: Direction, k: f64) -> Col<c64> {
        let norm = 1.0 / (self.n_ris() as f64).sqrt();
        Col::from_fn(self.n_ris(), |i| {
            let (ny, nz) = self.element(i);
            cis(k * self.spacing * (nz as f64 * dir.psi_a + ny as f64 * dir.psi_e)) * norm
        })
    }

    /// Near-field response `c` normalized to the reference element:
    /// entry `exp(j k (r_{n_y n_z} - r)) / sqrt(N)`.
    ///
    /// In Fresnel mode the result is exactly `b ∘ d(mu)`.
    pub fn nf_steering(&self, dir: Direction, k: f64, r: f64, mode: SteeringMode) -> Result<Col<c64>> {
        if !(r > 0.0) {
            return Err(Error::NonPositiveRange(r));
        }
        match mode {
            SteeringMode::Exact => {
                let norm = 1.0 / (self.n_ris() as f64).sqrt();
                let mut out = Col::zeros(self.n_ris());
                for i in 0..self.n_ris() {
                    let (ny, nz) = self.element(i);
                    let dist = element_distance_exact(r, dir, ny, nz, self.spacing)?;
                    out[i] = cis(k * (dist - r)) * norm;
                }
                Ok(out)
            }
            SteeringMode::Fresnel => {
                let b = self.ris_far_field(dir, k);
                let d = MuProfile::from_range(self, r, dir)?.quadratic_vector(k, self.spacing);
                Ok(Col::from_fn(self.n_ris(), |i| b[i] * d[i]))
            }
        }
    }
}

/// Exact distance from the element `(n_y, n_z)` to a point at range `r` from
/// the reference element.
pub fn element_distance_exact(r: f64, dir: Direction, ny: usize, nz: usize, d: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveRange(r));
    }
    let (ny, nz) = (ny as f64, nz as f64);
    let sq = r * r + d * d * (ny * ny + nz * nz) + 2.0 * r * d * (nz * dir.psi_a + ny * dir.psi_e);
    Ok(sq.max(0.0).sqrt())
}

/// Second-order expansion of [`element_distance_exact`].
pub fn element_distance_fresnel(r: f64, dir: Direction, ny: usize, nz: usize, d: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveRange(r));
    }
    let (ny, nz) = (ny as f64, nz as f64);
    Ok(r + d * (nz * dir.psi_a + ny * dir.psi_e) + d * d * quadratic_weight(dir, ny, nz) / (2.0 * r))
}

/// `n_z^2 (1 - psi_a^2) + n_y^2 (1 - psi_e^2)`.
#[inline]
fn quadratic_weight(dir: Direction, ny: f64, nz: f64) -> f64 {
    nz * nz * (1.0 - dir.psi_a * dir.psi_a) + ny * ny * (1.0 - dir.psi_e * dir.psi_e)
}

/// Per-element effective distance `mu`, stored as `1 / mu` so that the
/// reference element and the far-field limit are both exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MuProfile {
    pub inv_mu: Vec<f64>,
}

impl MuProfile {
    /// `mu(r, psi)` for every element of the array.
    pub fn from_range(geom: &ArrayGeometry, r: f64, dir: Direction) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::NonPositiveRange(r));
        }
        let inv_mu = (0..geom.n_ris())
            .map(|i| {
                let (ny, nz) = geom.element(i);
                quadratic_weight(dir, ny as f64, nz as f64) / r
            })
            .collect();
        Ok(MuProfile { inv_mu })
    }

    /// Infinite range: the quadratic vector is all ones.
    pub fn far_field(n: usize) -> Self {
        MuProfile { inv_mu: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.inv_mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_mu.is_empty()
    }

    /// `mu` of element `i` (infinite for the reference element).
    pub fn mu(&self, i: usize) -> f64 {
        1.0 / self.inv_mu[i]
    }

    /// Profile of `mu / eta`, the carrier-referenced equivalent at a
    /// subcarrier with frequency ratio `eta`.
    pub fn scaled(&self, eta: f64) -> Self {
        MuProfile {
            inv_mu: self.inv_mu.iter().map(|v| v * eta).collect(),
        }
    }

    /// `d(mu, k)`: entry `exp(j k d^2 / (2 mu))`.
    pub fn quadratic_vector(&self, k: f64, spacing: f64) -> Col<c64> {
        let c = k * spacing * spacing / 2.0;
        Col::from_fn(self.inv_mu.len(), |i| cis(c * self.inv_mu[i]))
    }
}
