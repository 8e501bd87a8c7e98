//! Wideband cascaded channel synthesis.
//!
//! `G_p` (BS-RIS, far field) and `h_p` (RIS-UE, near field) are built per
//! subcarrier and combined into `H_p = diag(h_p^H) G_p`. The stacked channel
//! stores `vec(H_p)` as column `p`.

mod paths;
mod steering;

use std::f64::consts::PI;

use faer::{Col, Mat};
use rand::Rng;

pub use paths::{rician_amplitudes, sample_paths, BsRisPath, RisUePath};
pub use steering::{
    element_distance_exact, element_distance_fresnel, wavenumber, ArrayGeometry, Direction, MuProfile,
    SteeringMode,
};

use crate::c64;
use crate::config::{FrequencyGrid, SystemConfig};
use crate::error::{ensure_dim, Result};
use crate::linalg::cis;

/// `G_p = sqrt(N_t N / L) sum_l rho_l e^{-j 2 pi f_p tau_l} b(theta_l) a^H(vartheta_l)`
/// for every subcarrier.
pub fn build_bs_ris(paths: &[BsRisPath], grid: &FrequencyGrid, geom: &ArrayGeometry) -> Vec<Mat<c64>> {
    let scale = ((geom.n_t * geom.n_ris()) as f64 / paths.len() as f64).sqrt();
    grid.frequencies
        .iter()
        .zip(&grid.wavenumbers)
        .map(|(&f, &k)| {
            let mut g = Mat::<c64>::zeros(geom.n_ris(), geom.n_t);
            for path in paths {
                let rho = path.gain * cis(-2.0 * PI * f * path.delay_s) * scale;
                let b = geom.ris_far_field(Direction::from_angles(path.ris_angles.0, path.ris_angles.1), k);
                let a = geom.bs_steering(path.aod_bs, k);
                for t in 0..geom.n_t {
                    let w = rho * a[t].conj();
                    for i in 0..geom.n_ris() {
                        g[(i, t)] += b[i] * w;
                    }
                }
            }
            g
        })
        .collect()
}

/// `h_p = sqrt(N / K) sum_k xi_k e^{-j 2 pi f_p tau_k} c(phi_k, r_k)` for every
/// subcarrier.
pub fn build_ris_ue(
    paths: &[RisUePath],
    grid: &FrequencyGrid,
    geom: &ArrayGeometry,
    mode: SteeringMode,
) -> Result<Vec<Col<c64>>> {
    let scale = (geom.n_ris() as f64 / paths.len() as f64).sqrt();
    grid.frequencies
        .iter()
        .zip(&grid.wavenumbers)
        .map(|(&f, &k)| {
            let mut h = Col::<c64>::zeros(geom.n_ris());
            for path in paths {
                let xi = path.gain * cis(-2.0 * PI * f * path.delay_s) * scale;
                let dir = Direction::from_angles(path.angles.0, path.angles.1);
                let c = geom.nf_steering(dir, k, path.range_m, mode)?;
                for i in 0..geom.n_ris() {
                    h[i] += xi * c[i];
                }
            }
            Ok(h)
        })
        .collect()
}

/// `diag(h^H) G`.
pub fn cascade(g: &Mat<c64>, h: &Col<c64>) -> Result<Mat<c64>> {
    ensure_dim("cascade rows", g.nrows(), h.nrows())?;
    Ok(Mat::from_fn(g.nrows(), g.ncols(), |i, t| h[i].conj() * g[(i, t)]))
}

/// Stacks `vec(diag(h_p^H) G_p)` as columns.
pub fn build_cascaded(gs: &[Mat<c64>], hs: &[Col<c64>]) -> Result<Mat<c64>> {
    ensure_dim("subcarrier count", gs.len(), hs.len())?;
    let Some(first) = gs.first() else {
        return Ok(Mat::zeros(0, 0));
    };
    let (n, nt) = (first.nrows(), first.ncols());
    let mut out = Mat::<c64>::zeros(n * nt, gs.len());
    for (p, (g, h)) in gs.iter().zip(hs).enumerate() {
        ensure_dim("G_p rows", n, g.nrows())?;
        ensure_dim("G_p cols", nt, g.ncols())?;
        ensure_dim("h_p length", n, h.nrows())?;
        for t in 0..nt {
            for i in 0..n {
                out[(t * n + i, p)] = h[i].conj() * g[(i, t)];
            }
        }
    }
    Ok(out)
}

/// A sampled wideband channel together with its per-subcarrier factors.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub bs_ris_paths: Vec<BsRisPath>,
    pub ris_ue_paths: Vec<RisUePath>,
    /// `(N N_t) x P`, column `p` is `vec(H_p)`.
    pub cascaded: Mat<c64>,
    /// `G_p` per subcarrier.
    pub bs_ris: Vec<Mat<c64>>,
    /// `h_p` per subcarrier.
    pub ris_ue: Vec<Col<c64>>,
}

impl ChannelRealization {
    pub fn synthesize<R: Rng + ?Sized>(cfg: &SystemConfig, grid: &FrequencyGrid, rng: &mut R) -> Result<Self> {
        let (bs, ue) = sample_paths(cfg, rng)?;
        Self::from_paths(cfg, grid, bs, ue)
    }

    pub fn from_paths(
        cfg: &SystemConfig,
        grid: &FrequencyGrid,
        bs_ris_paths: Vec<BsRisPath>,
        ris_ue_paths: Vec<RisUePath>,
    ) -> Result<Self> {
        let geom = ArrayGeometry::from_config(cfg);
        let bs_ris = build_bs_ris(&bs_ris_paths, grid, &geom);
        let ris_ue = build_ris_ue(&ris_ue_paths, grid, &geom, cfg.ue_steering)?;
        let cascaded = build_cascaded(&bs_ris, &ris_ue)?;
        Ok(ChannelRealization {
            bs_ris_paths,
            ris_ue_paths,
            cascaded,
            bs_ris,
            ris_ue,
        })
    }

    /// `H_p` as an `N x N_t` matrix.
    pub fn subcarrier(&self, p: usize) -> Result<Mat<c64>> {
        cascade(&self.bs_ris[p], &self.ris_ue[p])
    }
}
