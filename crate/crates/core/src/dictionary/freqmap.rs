use crate::channel::{Direction, MuProfile};
use crate::config::FrequencyGrid;
use crate::error::{Error, Result};

/// Maps parameters of a response evaluated at `f_p` onto the equivalent
/// parameters of the same response evaluated at the carrier.
///
/// Direction cosines and `sin(aod)` scale by `eta_p = f_p / f_c`, while the
/// effective distance scales as `mu / eta_p`. The map is exact at the `mu`
/// level; the underlying element-dependent range has no single scalar image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyMap {
    pub eta: f64,
}

impl FrequencyMap {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("frequency ratio must be positive, got {eta}")));
        }
        Ok(FrequencyMap { eta })
    }

    /// Map for zero-based subcarrier `p` of `grid`.
    pub fn for_subcarrier(grid: &FrequencyGrid, p: usize) -> Result<Self> {
        Self::new(grid.ratios[p])
    }

    pub fn direction(&self, dir: Direction) -> Direction {
        dir.scaled(self.eta)
    }

    pub fn sin_aod(&self, sin_aod: f64) -> f64 {
        self.eta * sin_aod
    }

    pub fn mu(&self, profile: &MuProfile) -> MuProfile {
        profile.scaled(self.eta)
    }
}
