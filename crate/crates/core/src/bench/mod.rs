//! Monte-Carlo NMSE sweeps over pilot length and SNR, energy-concentration
//! profiles and result persistence.

mod emit;
mod energy;

use std::path::PathBuf;
use std::time::Instant;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use emit::{emit, read_metadata, write_energy_csv, EmittedFiles, Metadata, RESULTS_HEADER};
pub use energy::{energy_profile, profile_coefficients, Concentration, EnergyProfile, EnergyRow, ENERGY_FRACTION};

use crate::c64;
use crate::channel::{ArrayGeometry, ChannelRealization};
use crate::config::{child_rng, subcarrier_grid, SystemConfig};
use crate::dictionary::{PolarConfig, PolarGrid, UnifiedDictionary};
use crate::error::{Error, Result};
use crate::measurement::{equivalent_matrix, gen_pilots, sensing_matrix, synthesize_observations};
use crate::solvers::{estimate, nmse_ratio, ratio_to_db, Method, Problem, SolverConfig};

/// The swept quantity and the value held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    PilotLength { values: Vec<usize>, snr_db: f64 },
    Snr { values: Vec<f64>, pilot_length: usize },
}

impl Sweep {
    pub fn axis_name(&self) -> &'static str {
        match self {
            Sweep::PilotLength { .. } => "pilot_length",
            Sweep::Snr { .. } => "snr_db",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::PilotLength { values, .. } => values.len(),
            Sweep::Snr { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(T, SNR dB)` of sweep point `i`.
    pub fn point(&self, i: usize) -> (usize, f64) {
        match self {
            Sweep::PilotLength { values, snr_db } => (values[i], *snr_db),
            Sweep::Snr { values, pilot_length } => (*pilot_length, values[i]),
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            Sweep::PilotLength { values, .. } => values[i] as f64,
            Sweep::Snr { values, .. } => values[i],
        }
    }

    fn max_pilot_length(&self) -> usize {
        (0..self.len()).map(|i| self.point(i).0).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub system: SystemConfig,
    pub sweep: Sweep,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub polar: PolarConfig,
}

/// Pilot lengths of the desk-scale `T` sweep: a quarter up to the whole of
/// `N N_t = 128`.
pub const DESK_PILOT_LENGTHS: [usize; 5] = [32, 48, 64, 96, 128];
/// SNR points (dB) of the desk-scale SNR sweep.
pub const DESK_SNRS_DB: [f64; 5] = [0.0, 5.0, 10.0, 15.0, 20.0];
/// Pilot length held fixed in the desk-scale SNR sweep.
pub const DESK_SNR_SWEEP_PILOTS: usize = 64;
pub const DESK_TRIALS: usize = 50;

impl ExperimentPlan {
    /// NMSE versus `T` at 10 dB on the desk profile, every method.
    pub fn desk_pilot_sweep() -> Self {
        let system = SystemConfig::desk();
        ExperimentPlan {
            seed: system.seed,
            system,
            sweep: Sweep::PilotLength {
                values: DESK_PILOT_LENGTHS.to_vec(),
                snr_db: 10.0,
            },
            methods: Method::ALL.to_vec(),
            trials: DESK_TRIALS,
            output_dir: None,
            solver: SolverConfig::default(),
            polar: PolarConfig::default(),
        }
    }

    /// NMSE versus SNR at `T = 64` on the desk profile, every method.
    pub fn desk_snr_sweep() -> Self {
        ExperimentPlan {
            sweep: Sweep::Snr {
                values: DESK_SNRS_DB.to_vec(),
                pilot_length: DESK_SNR_SWEEP_PILOTS,
            },
            ..Self::desk_pilot_sweep()
        }
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let plan: ExperimentPlan = serde_json::from_str(&text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        self.system.validate()?;
        self.solver.validate()?;
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("method list is empty".into());
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("method list has duplicates".into());
        }
        if self.sweep.is_empty() {
            return bad("sweep has no values".into());
        }
        let increasing = (1..self.sweep.len()).all(|i| self.sweep.value(i) > self.sweep.value(i - 1));
        if !increasing {
            return bad("sweep values must be strictly increasing".into());
        }
        for i in 0..self.sweep.len() {
            let (t, snr) = self.sweep.point(i);
            if t == 0 {
                return bad("pilot length must be at least 1".into());
            }
            if !snr.is_finite() {
                return bad(format!("SNR must be finite, got {snr}"));
            }
        }
        Ok(())
    }
}

/// JSON has no NaN; map it to `null` and back.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub sweep_value: f64,
    /// Mean of the per-trial linear NMSE over successful trials; NaN if
    /// every trial failed.
    #[serde(with = "nan_as_null")]
    pub mean_nmse: f64,
    #[serde(with = "nan_as_null")]
    pub nmse_db: f64,
    /// Successful trials.
    pub trials: usize,
    pub failures: usize,
    /// Standard error of `mean_nmse`, linear.
    pub std_error: f64,
    /// Mean wall time per trial in seconds.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub axis: String,
    /// Method-major, sweep points in plan order.
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn row(&self, method: Method, sweep_value: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.sweep_value == sweep_value)
    }

    /// `(sweep value, NMSE dB)` pairs of one method, skipping points where
    /// every trial failed.
    pub fn series(&self, method: Method) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.nmse_db.is_finite())
            .map(|r| (r.sweep_value, r.nmse_db))
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    ratio: Option<f64>,
    seconds: f64,
}

/// Shared, read-only inputs of every trial.
struct Context {
    grid: crate::config::FrequencyGrid,
    geom: ArrayGeometry,
    dict: UnifiedDictionary,
    polar_basis: Option<Mat<c64>>,
}

impl Context {
    fn new(plan: &ExperimentPlan) -> Result<Self> {
        let cfg = &plan.system;
        let polar_basis = if plan.methods.iter().any(|m| m.uses_polar()) {
            Some(PolarGrid::new(cfg, plan.polar)?.cascaded_basis(cfg.n_t))
        } else {
            None
        };
        Ok(Context {
            grid: subcarrier_grid(cfg)?,
            geom: ArrayGeometry::from_config(cfg),
            dict: UnifiedDictionary::for_config(cfg)?,
            polar_basis,
        })
    }
}

/// One trial: `outcomes[point][method]`. Every method at a point sees the
/// same channel, pilots and noise; shorter pilot schedules are prefixes of
/// the longest one.
fn run_trial(plan: &ExperimentPlan, ctx: &Context, trial: usize) -> Result<Vec<Vec<Outcome>>> {
    let cfg = &plan.system;
    let idx = trial as u64;
    let channel = ChannelRealization::synthesize(cfg, &ctx.grid, &mut child_rng(plan.seed, "channel", idx))?;
    let h = channel.cascaded.as_ref();
    let pilots = gen_pilots(&ctx.geom, plan.sweep.max_pilot_length(), &mut child_rng(plan.seed, "pilots", idx))?;
    let c_full = sensing_matrix(&pilots);
    let n_points = plan.sweep.len() as u64;
    let mut out = Vec::with_capacity(plan.sweep.len());
    for point in 0..plan.sweep.len() {
        let (t, snr_db) = plan.sweep.point(point);
        let c = c_full.as_ref().subcols(0, t);
        let mut rng = child_rng(plan.seed, "noise", idx * n_points + point as u64);
        let (y, noise_var) = synthesize_observations(h, c, snr_db, &mut rng)?;
        let omega = equivalent_matrix(c, &ctx.dict)?;
        let problem = Problem {
            y: y.as_ref(),
            omega: omega.as_ref(),
            c_matrix: c,
            noise_var,
            dict: &ctx.dict,
            polar_basis: ctx.polar_basis.as_ref().map(|b| b.as_ref()),
            truth: Some(h),
            path_pairs: cfg.n_paths_bs_ris * cfg.n_paths_ris_ue,
        };
        let row = plan
            .methods
            .iter()
            .map(|&m| {
                let start = Instant::now();
                let ratio = estimate(m, &problem, &plan.solver)
                    .and_then(|r| nmse_ratio(r.h_hat.as_ref(), h))
                    .ok()
                    .filter(|r| r.is_finite());
                Outcome {
                    ratio,
                    seconds: start.elapsed().as_secs_f64(),
                }
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

/// Runs every trial of `plan` (in parallel) and aggregates per
/// `(method, sweep point)`. A solver error or non-finite NMSE counts as a
/// failure for that row only; data-generation errors abort the sweep.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<ResultTable> {
    plan.validate()?;
    let ctx = Context::new(plan)?;
    let trials: Vec<Vec<Vec<Outcome>>> = (0..plan.trials)
        .into_par_iter()
        .map(|i| run_trial(plan, &ctx, i))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(plan.methods.len() * plan.sweep.len());
    for (mi, &method) in plan.methods.iter().enumerate() {
        for point in 0..plan.sweep.len() {
            let outcomes: Vec<Outcome> = trials.iter().map(|t| t[point][mi]).collect();
            let ratios: Vec<f64> = outcomes.iter().filter_map(|o| o.ratio).collect();
            let n = ratios.len();
            let mean = if n == 0 { f64::NAN } else { ratios.iter().sum::<f64>() / n as f64 };
            let std_error = if n < 2 {
                0.0
            } else {
                let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            };
            rows.push(ResultRow {
                method,
                sweep_value: plan.sweep.value(point),
                mean_nmse: mean,
                nmse_db: if n == 0 { f64::NAN } else { ratio_to_db(mean) },
                trials: n,
                failures: outcomes.len() - n,
                std_error,
                wall_time_s: outcomes.iter().map(|o| o.seconds).sum::<f64>() / outcomes.len() as f64,
            });
        }
    }
    Ok(ResultTable {
        axis: plan.sweep.axis_name().to_string(),
        rows,
    })
}
