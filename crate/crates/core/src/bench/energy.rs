use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::config::{child_rng, subcarrier_grid, SystemConfig};
use crate::dictionary::{blocks_for_fraction, peak_block, SparseCoefficients, UnifiedDictionary};
use crate::error::Result;

/// Energy fraction used for the block-count summary.
pub const ENERGY_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub trial: usize,
    pub subcarrier: usize,
    pub block: usize,
    pub energy: f64,
}

/// Per-(trial, subcarrier) summary of how concentrated the coefficients are.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub trial: usize,
    pub subcarrier: usize,
    /// Fewest blocks holding [`ENERGY_FRACTION`] of the column energy.
    pub blocks_95: usize,
    /// `None` for an all-zero column.
    pub peak_block: Option<usize>,
    pub total_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub block_size: usize,
    pub n_blocks: usize,
    pub rows: Vec<EnergyRow>,
    pub summary: Vec<Concentration>,
}

/// Block energies and concentration summary of one coefficient matrix.
pub fn profile_coefficients(coeffs: &SparseCoefficients, trial: usize) -> (Vec<EnergyRow>, Vec<Concentration>) {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for p in 0..coeffs.x_tilde.ncols() {
        let e = coeffs.block_energies(p);
        rows.extend(e.iter().enumerate().map(|(block, &energy)| EnergyRow {
            trial,
            subcarrier: p,
            block,
            energy,
        }));
        let total: f64 = e.iter().sum();
        summary.push(Concentration {
            trial,
            subcarrier: p,
            blocks_95: blocks_for_fraction(&e, ENERGY_FRACTION),
            peak_block: if total > 0.0 { peak_block(&e) } else { None },
            total_energy: total,
        });
    }
    (rows, summary)
}

/// Coefficient energy per block and subcarrier for `trials` channels drawn
/// from the same `"channel"` streams a sweep with this seed uses.
pub fn energy_profile(cfg: &SystemConfig, trials: usize, seed: u64) -> Result<EnergyProfile> {
    cfg.validate()?;
    let grid = subcarrier_grid(cfg)?;
    let dict = UnifiedDictionary::for_config(cfg)?;
    let mut profile = EnergyProfile {
        block_size: 0,
        n_blocks: 0,
        rows: Vec::new(),
        summary: Vec::new(),
    };
    for trial in 0..trials {
        let ch = ChannelRealization::synthesize(cfg, &grid, &mut child_rng(seed, "channel", trial as u64))?;
        let coeffs = dict.analyze(ch.cascaded.as_ref())?;
        profile.block_size = coeffs.block_size;
        profile.n_blocks = dict.dim().div_ceil(coeffs.block_size);
        let (rows, summary) = profile_coefficients(&coeffs, trial);
        profile.rows.extend(rows);
        profile.summary.extend(summary);
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    #[test]
    fn zero_channel_gives_zero_profile() {
        let coeffs = SparseCoefficients {
            x_tilde: Mat::zeros(16, 3),
            block_size: 4,
        };
        let (rows, summary) = profile_coefficients(&coeffs, 7);
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|r| r.energy == 0.0 && r.trial == 7));
        assert!(summary.iter().all(|s| s.blocks_95 == 0 && s.peak_block.is_none()));
    }

    #[test]
    fn profile_conserves_energy() {
        let cfg = SystemConfig::desk();
        let prof = energy_profile(&cfg, 2, 5).unwrap();
        assert_eq!(prof.block_size, 8);
        assert_eq!(prof.n_blocks, 16);
        assert_eq!(prof.rows.len(), 2 * cfg.n_subcarriers * 16);
        assert_eq!(prof.summary.len(), 2 * cfg.n_subcarriers);
        // E_mu is unitary, so ||X||^2 = N ||H||^2 per column
        let grid = subcarrier_grid(&cfg).unwrap();
        let ch = ChannelRealization::synthesize(&cfg, &grid, &mut child_rng(5, "channel", 1)).unwrap();
        for p in 0..cfg.n_subcarriers {
            let want = cfg.n_ris() as f64 * ch.cascaded.col(p).squared_norm_l2();
            let got = prof.summary[cfg.n_subcarriers + p].total_energy;
            assert!((got - want).abs() <= 1e-9 * want);
        }
    }
}
