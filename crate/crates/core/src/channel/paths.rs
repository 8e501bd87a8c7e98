use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::linalg::cis;

/// One far-field BS-RIS path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsRisPath {
    /// Frequency-flat base gain.
    #[serde(with = "crate::linalg::serde_complex")]
    pub gain: c64,
    /// Angle of departure at the BS, radians.
    pub aod_bs: f64,
    /// (azimuth, elevation) at the RIS, radians.
    pub ris_angles: (f64, f64),
    pub delay_s: f64,
}

/// One near-field RIS-UE path (the LoS path or a scatterer).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisUePath {
    #[serde(with = "crate::linalg::serde_complex")]
    pub gain: c64,
    /// (azimuth, elevation) of departure from the RIS, radians.
    pub angles: (f64, f64),
    pub range_m: f64,
    pub delay_s: f64,
    pub is_los: bool,
}

/// Amplitudes for `count` paths under a Rician split: the first path carries
/// `kappa / (kappa + 1)` of the power, the rest share `1 / (kappa + 1)`.
pub fn rician_amplitudes(count: usize, kappa: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => {
            let los = (kappa / (kappa + 1.0)).sqrt();
            let nlos = (1.0 / ((kappa + 1.0) * (count - 1) as f64)).sqrt();
            std::iter::once(los)
                .chain(std::iter::repeat_n(nlos, count - 1))
                .collect()
        }
    }
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-FRAC_PI_2..=FRAC_PI_2)
}

/// Draws both path sets. Angles are uniform on `[-pi/2, pi/2]`, gains have
/// uniform phase and Rician-split power, delays are `range / c`.
pub fn sample_paths<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<(Vec<BsRisPath>, Vec<RisUePath>)> {
    if cfg.n_paths_bs_ris == 0 || cfg.n_paths_ris_ue == 0 {
        return Err(Error::InvalidConfig("path counts must be at least 1".into()));
    }
    let kappa = cfg.rician_linear();
    let [r_min, r_max] = cfg.ue_range();
    if !(r_min > 0.0 && r_min <= r_max) {
        return Err(Error::InvalidConfig(format!("invalid UE range [{r_min}, {r_max}]")));
    }

    let bs_ris = rician_amplitudes(cfg.n_paths_bs_ris, kappa)
        .into_iter()
        .map(|amp| BsRisPath {
            gain: cis(rng.random_range(0.0..2.0 * PI)) * amp,
            aod_bs: uniform_angle(rng),
            ris_angles: (uniform_angle(rng), uniform_angle(rng)),
            delay_s: cfg.bs_ris_distance_m / SPEED_OF_LIGHT,
        })
        .collect();

    let ris_ue = rician_amplitudes(cfg.n_paths_ris_ue, kappa)
        .into_iter()
        .enumerate()
        .map(|(k, amp)| {
            let gain = cis(rng.random_range(0.0..2.0 * PI)) * amp;
            let angles = (uniform_angle(rng), uniform_angle(rng));
            let range_m = if r_min == r_max {
                r_min
            } else {
                rng.random_range(r_min..=r_max)
            };
            RisUePath {
                gain,
                angles,
                range_m,
                delay_s: range_m / SPEED_OF_LIGHT,
                is_los: k == 0,
            }
        })
        .collect();

    Ok((bs_ris, ris_ue))
}
