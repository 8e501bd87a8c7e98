//! Sparse recovery of the stacked channel from `Y = Omega X + N`.

pub mod greedy;
pub mod metrics;
pub mod pcsbl;

use std::fmt;
use std::str::FromStr;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

pub use greedy::{bomp, normalize_columns, omp, somp, GreedyOutput, GreedyParams};
pub use metrics::{nmse_db, nmse_ratio, ratio_to_db, NMSE_FLOOR_DB};
pub use pcsbl::{pcsbl_1d, pcsbl_2d, pcsbl_per_column, Coupling, NoiseMode, PcsblOutput, PcsblParams};

use crate::c64;
use crate::dictionary::{default_block_size, UnifiedDictionary};
use crate::error::{ensure_dim, Error, Result};
use crate::linalg::matmul;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Exact coefficients pushed through the dictionary round trip.
    #[serde(rename = "oracle")]
    Oracle,
    /// Joint pattern-coupled SBL over coefficients and subcarriers.
    #[serde(rename = "2d-pcsbl")]
    Pcsbl2d,
    /// Pattern-coupled SBL per subcarrier.
    #[serde(rename = "pcsbl")]
    Pcsbl,
    /// Block OMP per subcarrier on the unified dictionary.
    #[serde(rename = "bomp")]
    Bomp,
    /// OMP per subcarrier on the polar dictionary.
    #[serde(rename = "p-omp")]
    POmp,
    /// Simultaneous OMP over all subcarriers on the polar dictionary.
    #[serde(rename = "p-somp")]
    PSomp,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Oracle,
        Method::Pcsbl2d,
        Method::Pcsbl,
        Method::Bomp,
        Method::POmp,
        Method::PSomp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::Pcsbl2d => "2d-pcsbl",
            Method::Pcsbl => "pcsbl",
            Method::Bomp => "bomp",
            Method::POmp => "p-omp",
            Method::PSomp => "p-somp",
        }
    }

    pub fn uses_polar(self) -> bool {
        matches!(self, Method::POmp | Method::PSomp)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

/// Solver knobs shared by every method; each method reads the ones it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Greedy budget: blocks for BOMP, atoms for the polar pursuits. Defaults
    /// to `K L` blocks (`K L N_b` atoms), capped so the refit stays
    /// overdetermined.
    pub k_max: Option<usize>,
    /// Block length along the coefficient axis; defaults to `ceil(sqrt(N))`.
    pub block_size: Option<usize>,
    /// Greedy residual stop; defaults to the expected noise norm.
    pub residual_threshold: Option<f64>,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub noise_mode: NoiseMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = PcsblParams::default();
        SolverConfig {
            k_max: None,
            block_size: None,
            residual_threshold: None,
            beta: p.beta,
            a: p.a,
            b: p.b,
            max_iters: p.max_iters,
            tol: p.tol,
            noise_mode: p.noise_mode,
        }
    }
}

impl SolverConfig {
    pub fn pcsbl_params(&self) -> PcsblParams {
        PcsblParams {
            a: self.a,
            b: self.b,
            beta: self.beta,
            max_iters: self.max_iters,
            tol: self.tol,
            noise_mode: self.noise_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max == Some(0) {
            return Err(Error::InvalidConfig("k_max must be at least 1".into()));
        }
        if self.block_size == Some(0) {
            return Err(Error::InvalidConfig("block size must be at least 1".into()));
        }
        if let Some(t) = self.residual_threshold {
            if !(t >= 0.0) {
                return Err(Error::InvalidConfig(format!("residual threshold {t} must be non-negative")));
            }
        }
        self.pcsbl_params().validate()
    }
}

/// Everything a method may look at for one recovery.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    /// `T x P` observations.
    pub y: MatRef<'a, c64>,
    /// `T x (N N_t)` equivalent matrix of the unified dictionary.
    pub omega: MatRef<'a, c64>,
    /// `(N N_t) x T` sensing matrix.
    pub c_matrix: MatRef<'a, c64>,
    pub noise_var: f64,
    pub dict: &'a UnifiedDictionary,
    /// Cascaded polar basis, needed by the polar pursuits.
    pub polar_basis: Option<MatRef<'a, c64>>,
    /// True channel, needed by the oracle and for scoring.
    pub truth: Option<MatRef<'a, c64>>,
    /// Expected number of path pairs `K L`, used for default budgets.
    pub path_pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub method: Method,
    /// Coefficients in the unified dictionary.
    pub x_hat: Mat<c64>,
    /// `E_mu X_hat / sqrt(N)`.
    pub h_hat: Mat<c64>,
    pub iterations: usize,
    pub converged: bool,
    /// `||Y - C^T H_hat||_F`.
    pub final_residual: f64,
    /// Per-subcarrier supports for greedy methods, in the method's own
    /// dictionary.
    pub support: Option<Vec<Vec<usize>>>,
    pub noise_var: f64,
    pub nmse_db: Option<f64>,
}

/// JSON-friendly summary of an [`EstimateResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: Method,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub noise_var: f64,
    pub support_sizes: Option<Vec<usize>>,
    pub nmse_db: Option<f64>,
}

impl EstimateResult {
    pub fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            method: self.method,
            iterations: self.iterations,
            converged: self.converged,
            final_residual: self.final_residual,
            noise_var: self.noise_var,
            support_sizes: self.support.as_ref().map(|s| s.iter().map(Vec::len).collect()),
            nmse_db: self.nmse_db,
        }
    }
}

fn scale_back(x: &mut Mat<c64>, norms: &faer::Col<f64>) {
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            x[(i, j)] /= norms[i];
        }
    }
}

fn stack_columns(outs: &[GreedyOutput], n: usize) -> Mat<c64> {
    Mat::from_fn(n, outs.len(), |i, j| outs[j].x[(i, 0)])
}

/// Runs `method` on `problem`.
pub fn estimate(method: Method, problem: &Problem<'_>, cfg: &SolverConfig) -> Result<EstimateResult> {
    cfg.validate()?;
    let dict = problem.dict;
    let (t, p) = (problem.y.nrows(), problem.y.ncols());
    ensure_dim("equivalent matrix rows", t, problem.omega.nrows())?;
    ensure_dim("equivalent matrix columns", dict.dim(), problem.omega.ncols())?;
    ensure_dim("sensing matrix rows", dict.dim(), problem.c_matrix.nrows())?;
    ensure_dim("sensing matrix columns", t, problem.c_matrix.ncols())?;

    let block = cfg.block_size.unwrap_or_else(|| default_block_size(dict.geometry.n_ris()));
    let pairs = problem.path_pairs.max(1);
    let noise_var = problem.noise_var;
    let column_threshold = cfg.residual_threshold.unwrap_or((t as f64 * noise_var).sqrt());
    let atom_budget = cfg.k_max.unwrap_or(pairs * block).min(t).max(1);

    let mut support = None;
    let (x_hat, h_hat, iterations, converged, est_noise) = match method {
        Method::Oracle => {
            let h = problem
                .truth
                .ok_or_else(|| Error::InvalidConfig("the oracle needs the true channel".into()))?;
            let x = dict.analyze(h)?.x_tilde;
            let h_hat = dict.reconstruct(x.as_ref())?;
            (x, h_hat, 0, true, noise_var)
        }
        Method::Pcsbl2d | Method::Pcsbl => {
            let params = cfg.pcsbl_params();
            let out = if method == Method::Pcsbl2d {
                pcsbl_2d(problem.y, problem.omega, noise_var, &params)?
            } else {
                pcsbl_per_column(problem.y, problem.omega, noise_var, &params)?
            };
            let h_hat = dict.reconstruct(out.x.as_ref())?;
            (out.x, h_hat, out.iterations, out.converged, out.noise_var)
        }
        Method::Bomp => {
            let (a, norms) = normalize_columns(problem.omega);
            let blocks = cfg.k_max.unwrap_or(pairs).min((t / block).max(1));
            let params = GreedyParams {
                k_max: blocks,
                residual_threshold: column_threshold,
            };
            let outs = greedy::per_column(problem.y, a.ncols(), |y| bomp(y, a.as_ref(), block, &params))?;
            let mut x = stack_columns(&outs, a.ncols());
            scale_back(&mut x, &norms);
            let iterations = outs.iter().map(GreedyOutput::iterations).max().unwrap_or(0);
            support = Some(outs.into_iter().map(|o| o.support).collect());
            let h_hat = dict.reconstruct(x.as_ref())?;
            (x, h_hat, iterations, true, noise_var)
        }
        Method::POmp | Method::PSomp => {
            let basis = problem
                .polar_basis
                .ok_or_else(|| Error::InvalidConfig(format!("{method} needs the polar basis")))?;
            ensure_dim("polar basis rows", dict.dim(), basis.nrows())?;
            let raw = matmul(problem.c_matrix.transpose(), basis);
            let (a, norms) = normalize_columns(raw.as_ref());
            let (mut z, iterations, supports) = if method == Method::POmp {
                let params = GreedyParams {
                    k_max: atom_budget,
                    residual_threshold: column_threshold,
                };
                let outs = greedy::per_column(problem.y, a.ncols(), |y| omp(y, a.as_ref(), &params))?;
                let iterations = outs.iter().map(GreedyOutput::iterations).max().unwrap_or(0);
                (stack_columns(&outs, a.ncols()), iterations, outs.into_iter().map(|o| o.support).collect())
            } else {
                let params = GreedyParams {
                    k_max: atom_budget,
                    residual_threshold: cfg.residual_threshold.unwrap_or((t as f64 * p as f64 * noise_var).sqrt()),
                };
                let out = somp(problem.y, a.as_ref(), &params)?;
                let iterations = out.iterations();
                (out.x, iterations, vec![out.support; p])
            };
            scale_back(&mut z, &norms);
            support = Some(supports);
            let h_hat = matmul(basis, z.as_ref());
            let x = dict.analyze(h_hat.as_ref())?.x_tilde;
            (x, h_hat, iterations, true, noise_var)
        }
    };
    let final_residual = (problem.y - matmul(problem.c_matrix.transpose(), h_hat.as_ref())).norm_l2();
    let nmse = match problem.truth {
        Some(h) => Some(nmse_db(h_hat.as_ref(), h)?),
        None => None,
    };
    Ok(EstimateResult {
        method,
        x_hat,
        h_hat,
        iterations,
        converged,
        final_residual,
        support,
        noise_var: est_noise,
        nmse_db: nmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelRealization;
    use crate::config::{child_rng, subcarrier_grid, SystemConfig};
    use crate::dictionary::{PolarConfig, PolarGrid};
    use crate::linalg::{max_abs_diff, rel_err};
    use crate::measurement::{gen_pilots, ObservationSet};

    struct Fixture {
        dict: UnifiedDictionary,
        basis: Mat<c64>,
        h: Mat<c64>,
        obs: ObservationSet,
    }

    fn fixture(t: usize, snr: f64) -> Fixture {
        let cfg = SystemConfig::desk();
        let grid = subcarrier_grid(&cfg).unwrap();
        let dict = UnifiedDictionary::for_config(&cfg).unwrap();
        let basis = PolarGrid::new(&cfg, PolarConfig::default()).unwrap().cascaded_basis(cfg.n_t);
        let ch = ChannelRealization::synthesize(&cfg, &grid, &mut child_rng(9, "channel", 0)).unwrap();
        let pilots = gen_pilots(&dict.geometry, t, &mut child_rng(9, "pilots", 0)).unwrap();
        let obs = ObservationSet::new(ch.cascaded.as_ref(), &pilots, &dict, snr, &mut child_rng(9, "noise", 0)).unwrap();
        Fixture {
            dict,
            basis,
            h: ch.cascaded,
            obs,
        }
    }

    fn problem(f: &Fixture) -> Problem<'_> {
        Problem {
            y: f.obs.y.as_ref(),
            omega: f.obs.omega.as_ref(),
            c_matrix: f.obs.c_matrix.as_ref(),
            noise_var: f.obs.noise_var,
            dict: &f.dict,
            polar_basis: Some(f.basis.as_ref()),
            truth: Some(f.h.as_ref()),
            path_pairs: 4,
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
            assert_eq!(serde_json::from_str::<Method>(&json).unwrap(), m);
        }
        assert!("lasso".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        for bad in [
            SolverConfig { k_max: Some(0), ..Default::default() },
            SolverConfig { beta: -0.1, ..Default::default() },
            SolverConfig { tol: 0.0, ..Default::default() },
            SolverConfig { block_size: Some(0), ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        let parsed: SolverConfig = serde_json::from_str(r#"{"beta": 0.5, "k_max": 3}"#).unwrap();
        assert_eq!(parsed.beta, 0.5);
        assert_eq!(parsed.k_max, Some(3));
        assert!(serde_json::from_str::<SolverConfig>(r#"{"betta": 1}"#).is_err());
    }

    #[test]
    fn oracle_is_exact() {
        let f = fixture(32, 10.0);
        let r = estimate(Method::Oracle, &problem(&f), &SolverConfig::default()).unwrap();
        assert!(r.nmse_db.unwrap() <= -240.0);
    }

    #[test]
    fn every_method_runs_and_is_consistent() {
        let f = fixture(48, 10.0);
        let pr = problem(&f);
        for m in Method::ALL {
            let r = estimate(m, &pr, &SolverConfig::default()).unwrap();
            let back = f.dict.reconstruct(r.x_hat.as_ref()).unwrap();
            assert!(max_abs_diff(back.as_ref(), r.h_hat.as_ref()) <= 1e-12 * r.h_hat.norm_l2().max(1.0), "{m}");
            let nmse = r.nmse_db.unwrap();
            assert!(nmse.is_finite() && nmse < 5.0, "{m}: {nmse}");
            if let Some(s) = &r.support {
                assert_eq!(s.len(), 16);
            }
        }
    }

    #[test]
    fn estimates_are_deterministic() {
        let f = fixture(40, 5.0);
        let pr = problem(&f);
        for m in [Method::Pcsbl2d, Method::POmp] {
            let a = estimate(m, &pr, &SolverConfig::default()).unwrap();
            let b = estimate(m, &pr, &SolverConfig::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn greedy_support_is_scale_invariant() {
        let f = fixture(40, 10.0);
        let scaled_y = &f.obs.y * faer::Scale(c64::new(-3.0, 2.0));
        let mut pr = problem(&f);
        let base = estimate(Method::POmp, &pr, &SolverConfig::default()).unwrap();
        pr.y = scaled_y.as_ref();
        pr.noise_var *= 13.0;
        let scaled = estimate(Method::POmp, &pr, &SolverConfig::default()).unwrap();
        assert_eq!(base.support, scaled.support);
        let expect = &base.h_hat * faer::Scale(c64::new(-3.0, 2.0));
        assert!(rel_err(scaled.h_hat.as_ref(), expect.as_ref()) < 1e-8);
    }

    #[test]
    fn missing_inputs_are_errors() {
        let f = fixture(16, 10.0);
        let mut pr = problem(&f);
        pr.polar_basis = None;
        assert!(estimate(Method::PSomp, &pr, &SolverConfig::default()).is_err());
        pr.truth = None;
        assert!(estimate(Method::Oracle, &pr, &SolverConfig::default()).is_err());
        let r = estimate(Method::Bomp, &pr, &SolverConfig::default()).unwrap();
        assert!(r.nmse_db.is_none());
    }
}
