//! System parameters, the OFDM subcarrier grid, near-field boundaries and
//! seed derivation.
//!
//! Config files are JSON objects whose keys are the field names of
//! [`SystemConfig`]; all quantities are SI (Hz, m, dB). Optional keys fall back
//! to the documented defaults.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::SteeringMode;
use crate::error::{Error, Result};

/// Propagation speed used for wavelengths and delays. The round value keeps
/// `lambda/2 = 1.5 mm` at 100 GHz.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antenna count.
    pub n_t: usize,
    /// RIS elements along the y axis.
    pub n_y: usize,
    /// RIS elements along the z axis.
    pub n_z: usize,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n_subcarriers: usize,
    /// L, number of BS-RIS paths.
    pub n_paths_bs_ris: usize,
    /// K, number of RIS-UE paths (path 0 is line of sight).
    pub n_paths_ris_ue: usize,
    pub rician_factor_db: f64,
    pub bs_ris_distance_m: f64,
    /// UE / scatterer range interval. `None` places them in the near field,
    /// uniformly on `[fresnel, rayleigh]`.
    #[serde(default)]
    pub ue_distance_range_m: Option<[f64; 2]>,
    /// Inter-element spacing; `None` means half a carrier wavelength.
    #[serde(default)]
    pub element_spacing_m: Option<f64>,
    /// Distance model used to synthesize the RIS-UE hop.
    #[serde(default)]
    pub ue_steering: SteeringMode,
    #[serde(default)]
    pub seed: u64,
}

impl SystemConfig {
    /// Desk-scale profile: 16x4 RIS, 2 BS antennas, 16 subcarriers.
    pub fn desk() -> Self {
        SystemConfig {
            n_t: 2,
            n_y: 16,
            n_z: 4,
            carrier_hz: 100e9,
            bandwidth_hz: 10e9,
            n_subcarriers: 16,
            n_paths_bs_ris: 2,
            n_paths_ris_ue: 2,
            rician_factor_db: 13.0,
            bs_ris_distance_m: 50.0,
            ue_distance_range_m: None,
            element_spacing_m: None,
            ue_steering: SteeringMode::Exact,
            seed: 2024,
        }
    }

    /// Full-scale profile: 128x8 RIS, 4 BS antennas, 128 subcarriers.
    /// Correct but far too heavy for the Bayesian solvers on a laptop.
    pub fn full_scale() -> Self {
        SystemConfig {
            n_t: 4,
            n_y: 128,
            n_z: 8,
            n_subcarriers: 128,
            ..Self::desk()
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SystemConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// N, total RIS element count.
    pub fn n_ris(&self) -> usize {
        self.n_y * self.n_z
    }

    /// Length of `vec(H_p)`.
    pub fn cascaded_dim(&self) -> usize {
        self.n_ris() * self.n_t
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn carrier_wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    pub fn spacing(&self) -> f64 {
        self.element_spacing_m
            .unwrap_or_else(|| self.wavelength() / 2.0)
    }

    /// Rician factor as a linear power ratio.
    pub fn rician_linear(&self) -> f64 {
        10f64.powf(self.rician_factor_db / 10.0)
    }

    /// RIS aperture, the diagonal over element centers.
    pub fn aperture(&self) -> f64 {
        let dy = self.n_y.saturating_sub(1) as f64;
        let dz = self.n_z.saturating_sub(1) as f64;
        self.spacing() * (dy * dy + dz * dz).sqrt()
    }

    /// UE range interval actually used for sampling.
    pub fn ue_range(&self) -> [f64; 2] {
        self.ue_distance_range_m.unwrap_or_else(|| {
            let b = field_boundaries(self);
            [b.fresnel_m, b.rayleigh_m]
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, v) in [
            ("n_t", self.n_t),
            ("n_y", self.n_y),
            ("n_z", self.n_z),
            ("n_subcarriers", self.n_subcarriers),
            ("n_paths_bs_ris", self.n_paths_bs_ris),
            ("n_paths_ris_ue", self.n_paths_ris_ue),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return bad(format!("carrier_hz must be positive, got {}", self.carrier_hz));
        }
        if !(self.bandwidth_hz >= 0.0 && self.bandwidth_hz < self.carrier_hz) {
            return bad(format!(
                "bandwidth_hz must lie in [0, carrier_hz), got {}",
                self.bandwidth_hz
            ));
        }
        if !self.rician_factor_db.is_finite() {
            return bad("rician_factor_db must be finite".into());
        }
        if !(self.bs_ris_distance_m > 0.0) {
            return bad("bs_ris_distance_m must be positive".into());
        }
        if let Some(d) = self.element_spacing_m {
            if !(d.is_finite() && d > 0.0) {
                return bad(format!("element_spacing_m must be positive, got {d}"));
            }
        }
        match self.ue_distance_range_m {
            Some([lo, hi]) => {
                if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                    return bad(format!("ue_distance_range_m must satisfy 0 < min <= max, got [{lo}, {hi}]"));
                }
            }
            None => {
                let b = field_boundaries(self);
                if !(b.fresnel_m > 0.0 && b.fresnel_m < b.rayleigh_m) {
                    return bad(format!(
                        "near-field placement needs fresnel < rayleigh, got [{}, {}]",
                        b.fresnel_m, b.rayleigh_m
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Subcarrier frequencies with their wavenumbers and ratios to the carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub carrier_hz: f64,
    pub frequencies: Vec<f64>,
    pub wavenumbers: Vec<f64>,
    /// `eta_p = f_p / f_c = k_p / k_c`.
    pub ratios: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(carrier_hz: f64, bandwidth_hz: f64, n_subcarriers: usize) -> Result<Self> {
        if n_subcarriers == 0 {
            return Err(Error::InvalidConfig("subcarrier count must be at least 1".into()));
        }
        if !(bandwidth_hz >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be non-negative, got {bandwidth_hz}"
            )));
        }
        let frequencies: Vec<f64> = (1..=n_subcarriers)
            .map(|p| subcarrier_frequency(carrier_hz, bandwidth_hz, n_subcarriers, p))
            .collect();
        let wavenumbers = frequencies
            .iter()
            .map(|f| 2.0 * PI * f / SPEED_OF_LIGHT)
            .collect();
        let ratios = frequencies.iter().map(|f| f / carrier_hz).collect();
        Ok(FrequencyGrid {
            carrier_hz,
            frequencies,
            wavenumbers,
            ratios,
        })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn carrier_wavenumber(&self) -> f64 {
        2.0 * PI * self.carrier_hz / SPEED_OF_LIGHT
    }
}

/// `f_p = f_c + (2p - P) B / (2P)` for the one-based subcarrier index `p`.
pub fn subcarrier_frequency(carrier_hz: f64, bandwidth_hz: f64, n: usize, p: usize) -> f64 {
    let offset = (2.0 * p as f64 - n as f64) * bandwidth_hz / (2.0 * n as f64);
    carrier_hz + offset
}

pub fn subcarrier_grid(cfg: &SystemConfig) -> Result<FrequencyGrid> {
    FrequencyGrid::new(cfg.carrier_hz, cfg.bandwidth_hz, cfg.n_subcarriers)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldBoundaries {
    pub fresnel_m: f64,
    pub rayleigh_m: f64,
}

/// Fresnel distance `0.62 sqrt(D^3 / lambda)` and Rayleigh distance
/// `2 D^2 / lambda` of the RIS aperture.
pub fn field_boundaries(cfg: &SystemConfig) -> FieldBoundaries {
    let d = cfg.aperture();
    let lambda = cfg.wavelength();
    FieldBoundaries {
        fresnel_m: 0.62 * (d.powi(3) / lambda).sqrt(),
        rayleigh_m: 2.0 * d * d / lambda,
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for one stochastic consumer from the root seed,
/// a purpose label and an index (trial number, sweep point, ...).
pub fn child_seed(root: u64, label: &str, index: u64) -> u64 {
    // FNV-1a over the label
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(splitmix64(root ^ h).wrapping_add(splitmix64(index)))
}

pub fn child_rng(root: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(root, label, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn subcarrier_examples() {
        let g = FrequencyGrid::new(100e9, 10e9, 128).unwrap();
        assert_eq!(g.frequencies[63], 100e9);
        assert_eq!(g.ratios[63], 1.0);
        assert!(close(g.frequencies[127], 105e9, 1e-15));
        assert!(close(g.ratios[127], 1.05, 1e-15));
        assert!(close(g.frequencies[0], 95.078125e9, 1e-15));
    }

    #[test]
    fn grid_spacing_and_span() {
        let g = FrequencyGrid::new(100e9, 10e9, 16).unwrap();
        for w in g.frequencies.windows(2) {
            assert!(close(w[1] - w[0], 10e9 / 16.0, 1e-9));
        }
        for f in &g.frequencies {
            assert!((f - 100e9).abs() <= 5e9);
        }
        assert!(g.ratios.windows(2).all(|w| w[1] > w[0]));
        for (k, eta) in g.wavenumbers.iter().zip(&g.ratios) {
            assert!(close(k / g.carrier_wavenumber(), *eta, 1e-14));
        }
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(FrequencyGrid::new(100e9, 10e9, 0).is_err());
        assert!(FrequencyGrid::new(100e9, -1.0, 4).is_err());
    }

    #[test]
    fn full_scale_boundaries() {
        let cfg = SystemConfig {
            element_spacing_m: Some(1.5e-3),
            ..SystemConfig::full_scale()
        };
        let b = field_boundaries(&cfg);
        assert!((b.fresnel_m - 0.9433).abs() / 0.9433 < 5e-3);
        assert!((b.rayleigh_m - 24.267).abs() / 24.267 < 5e-3);
        // the default half-wavelength spacing is the same array
        assert_eq!(SystemConfig::full_scale().spacing(), 1.5e-3);
    }

    #[test]
    fn single_element_has_no_aperture() {
        let cfg = SystemConfig {
            n_y: 1,
            n_z: 1,
            ..SystemConfig::desk()
        };
        let b = field_boundaries(&cfg);
        assert_eq!(b.fresnel_m, 0.0);
        assert_eq!(b.rayleigh_m, 0.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn validation() {
        assert!(SystemConfig::desk().validate().is_ok());
        assert!(SystemConfig::full_scale().validate().is_ok());
        let mut c = SystemConfig::desk();
        c.n_subcarriers = 0;
        assert!(c.validate().is_err());
        let mut c = SystemConfig::desk();
        c.bandwidth_hz = 200e9;
        assert!(c.validate().is_err());
        let mut c = SystemConfig::desk();
        c.ue_distance_range_m = Some([2.0, 1.0]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_defaults_fill_optional_keys() {
        let text = r#"{"n_t":2,"n_y":16,"n_z":4,"carrier_hz":1e11,"bandwidth_hz":1e10,
            "n_subcarriers":16,"n_paths_bs_ris":2,"n_paths_ris_ue":2,
            "rician_factor_db":13.0,"bs_ris_distance_m":50.0}"#;
        let cfg: SystemConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.ue_steering, SteeringMode::Exact);
        assert_eq!(cfg.spacing(), 1.5e-3);
    }

    #[test]
    fn child_seeds_separate_purposes_and_trials() {
        let a = child_seed(7, "channel", 0);
        assert_eq!(a, child_seed(7, "channel", 0));
        assert_ne!(a, child_seed(7, "channel", 1));
        assert_ne!(a, child_seed(7, "pilots", 0));
        assert_ne!(a, child_seed(8, "channel", 0));
    }
}
