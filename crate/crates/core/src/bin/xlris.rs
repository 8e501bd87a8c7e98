use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use xlris::bench::{self, ExperimentPlan, Sweep};
use xlris::config::{child_rng, subcarrier_grid, SystemConfig};
use xlris::container::{self, Container, ObservationMeta};
use xlris::dictionary::{PolarConfig, PolarGrid, UnifiedDictionary};
use xlris::channel::{ArrayGeometry, ChannelRealization};
use xlris::measurement::{gen_pilots, ObservationSet};
use xlris::solvers::{estimate, Method, NoiseMode, Problem, SolverConfig};
use xlris::validate::identity_suite;

#[derive(Parser)]
#[command(name = "xlris", version, about = "Near-field wideband XL-RIS channel estimation benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// NMSE versus pilot length.
    SweepT(SweepTArgs),
    /// NMSE versus SNR at a fixed pilot length.
    SweepSnr(SweepSnrArgs),
    /// Per-block coefficient energy of sampled channels.
    EnergyProfile(EnergyArgs),
    /// Runs the numerical identity suite; exits nonzero if a check fails.
    Validate(ValidateArgs),
    /// Draws one channel with pilots and observations and dumps it.
    Simulate(SimulateArgs),
    /// Reruns solvers on a dumped observation set.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Desk,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Known,
    Em,
}

#[derive(Args)]
struct SystemArgs {
    /// Built-in system profile.
    #[arg(long, value_enum, default_value = "desk")]
    profile: Profile,
    /// JSON system config; replaces the profile.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; defaults to the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl SystemArgs {
    fn system(&self) -> Result<SystemConfig> {
        let cfg = match &self.config {
            Some(p) => SystemConfig::from_json_file(p)?,
            None => match self.profile {
                Profile::Desk => SystemConfig::desk(),
                Profile::Full => SystemConfig::full_scale(),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn seed(&self, cfg: &SystemConfig) -> u64 {
        self.seed.unwrap_or(cfg.seed)
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Greedy budget (blocks for BOMP, atoms for the polar pursuits).
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    residual_threshold: Option<f64>,
    /// Pattern-coupling strength.
    #[arg(long)]
    beta: Option<f64>,
    /// Gamma-prior shape.
    #[arg(long)]
    a: Option<f64>,
    /// Gamma-prior rate.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    noise_mode: Option<NoiseArg>,
    #[arg(long)]
    polar_rings: Option<usize>,
    #[arg(long)]
    polar_gamma: Option<f64>,
}

impl SolverArgs {
    fn apply(&self, s: &mut SolverConfig, polar: &mut PolarConfig) {
        if self.k_max.is_some() {
            s.k_max = self.k_max;
        }
        if self.block_size.is_some() {
            s.block_size = self.block_size;
        }
        if self.residual_threshold.is_some() {
            s.residual_threshold = self.residual_threshold;
        }
        s.beta = self.beta.unwrap_or(s.beta);
        s.a = self.a.unwrap_or(s.a);
        s.b = self.b.unwrap_or(s.b);
        s.max_iters = self.max_iters.unwrap_or(s.max_iters);
        s.tol = self.tol.unwrap_or(s.tol);
        if let Some(m) = self.noise_mode {
            s.noise_mode = match m {
                NoiseArg::Known => NoiseMode::Known,
                NoiseArg::Em => NoiseMode::Em,
            };
        }
        polar.rings = self.polar_rings.unwrap_or(polar.rings);
        polar.gamma = self.polar_gamma.unwrap_or(polar.gamma);
    }
}

#[derive(Args)]
struct SweepCommon {
    #[command(flatten)]
    system: SystemArgs,
    /// JSON experiment plan; flags given alongside override its fields.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SweepTArgs {
    #[command(flatten)]
    common: SweepCommon,
    /// Comma-separated pilot lengths.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
}

#[derive(Args)]
struct SweepSnrArgs {
    #[command(flatten)]
    common: SweepCommon,
    /// Comma-separated SNRs in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    #[arg(long)]
    pilot_length: Option<usize>,
}

#[derive(Args)]
struct EnergyArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value = "results/energy-profile")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Random draws per identity family.
    #[arg(long, default_value_t = 20)]
    instances: usize,
    /// CSV file for the check table.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Trial index; selects the same random streams a sweep trial uses.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, default_value_t = 64)]
    pilot_length: usize,
    /// Omit for noise-free observations.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Also store the unified dictionary.
    #[arg(long)]
    with_dictionary: bool,
    /// Container file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Container written by `simulate`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "results/replay")]
    out: PathBuf,
}

fn build_plan(common: &SweepCommon, default: ExperimentPlan) -> Result<ExperimentPlan> {
    let mut plan = match &common.plan {
        Some(p) => ExperimentPlan::from_json_file(p)?,
        None => {
            let system = common.system.system()?;
            ExperimentPlan {
                seed: system.seed,
                system,
                ..default
            }
        }
    };
    if let Some(seed) = common.system.seed {
        plan.seed = seed;
    }
    if let Some(m) = &common.methods {
        plan.methods = m.clone();
    }
    plan.trials = common.trials.unwrap_or(plan.trials);
    if common.out.is_some() {
        plan.output_dir = common.out.clone();
    }
    common.solver.apply(&mut plan.solver, &mut plan.polar);
    Ok(plan)
}

fn run_plan(plan: &ExperimentPlan, default_out: &str) -> Result<()> {
    plan.validate()?;
    let out = plan
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_out));
    let start = Instant::now();
    let table = bench::run_sweep(plan)?;
    let files = bench::emit(&table, plan, &out, start.elapsed().as_secs_f64())?;
    println!("{:<10} {:>12} {:>10} {:>8}", "method", table.axis, "nmse_db", "failed");
    for r in &table.rows {
        println!("{:<10} {:>12} {:>10.2} {:>8}", r.method.name(), r.sweep_value, r.nmse_db, r.failures);
    }
    println!("wrote {}", files.csv.display());
    Ok(())
}

fn sweep_t(args: &SweepTArgs) -> Result<()> {
    let mut plan = build_plan(&args.common, ExperimentPlan::desk_pilot_sweep())?;
    match &mut plan.sweep {
        Sweep::PilotLength { values, snr_db } => {
            if let Some(v) = &args.values {
                *values = v.clone();
            }
            *snr_db = args.snr_db.unwrap_or(*snr_db);
        }
        Sweep::Snr { .. } => bail!("plan sweeps SNR; use sweep-snr"),
    }
    run_plan(&plan, "results/sweep-t")
}

fn sweep_snr(args: &SweepSnrArgs) -> Result<()> {
    let mut plan = build_plan(&args.common, ExperimentPlan::desk_snr_sweep())?;
    match &mut plan.sweep {
        Sweep::Snr { values, pilot_length } => {
            if let Some(v) = &args.values {
                *values = v.clone();
            }
            *pilot_length = args.pilot_length.unwrap_or(*pilot_length);
        }
        Sweep::PilotLength { .. } => bail!("plan sweeps pilot length; use sweep-t"),
    }
    run_plan(&plan, "results/sweep-snr")
}

fn energy(args: &EnergyArgs) -> Result<()> {
    let cfg = args.system.system()?;
    let profile = bench::energy_profile(&cfg, args.trials, args.system.seed(&cfg))?;
    let files = bench::write_energy_csv(&profile, &args.out)?;
    let counts: Vec<usize> = profile.summary.iter().map(|s| s.blocks_95).collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64;
    println!(
        "{} blocks of {}; blocks holding {:.0}% energy: mean {:.2}, max {}",
        profile.n_blocks,
        profile.block_size,
        100.0 * bench::ENERGY_FRACTION,
        mean,
        counts.iter().max().copied().unwrap_or(0)
    );
    println!("wrote {} and {}", files[0].display(), files[1].display());
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<ExitCode> {
    let cfg = args.system.system()?;
    let checks = identity_suite(&cfg, args.system.seed(&cfg), args.instances)?;
    let mut ok = true;
    for c in &checks {
        ok &= c.passed;
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<28} {:.3e} <= {:.3e}", c.name, c.value, c.tolerance);
    }
    if let Some(path) = &args.out {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["check", "value", "tolerance", "passed"])?;
        for c in &checks {
            w.write_record([c.name.clone(), c.value.to_string(), c.tolerance.to_string(), c.passed.to_string()])?;
        }
        w.flush()?;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = args.system.system()?;
    let seed = args.system.seed(&cfg);
    let grid = subcarrier_grid(&cfg)?;
    let dict = UnifiedDictionary::for_config(&cfg)?;
    let ch = ChannelRealization::synthesize(&cfg, &grid, &mut child_rng(seed, "channel", args.trial))?;
    let pilots = gen_pilots(
        &ArrayGeometry::from_config(&cfg),
        args.pilot_length,
        &mut child_rng(seed, "pilots", args.trial),
    )?;
    let snr = args.snr_db.unwrap_or(f64::INFINITY);
    let obs = ObservationSet::new(
        ch.cascaded.as_ref(),
        &pilots,
        &dict,
        snr,
        &mut child_rng(seed, "noise", args.trial),
    )?;
    let meta = ObservationMeta {
        system: cfg,
        seed,
        trial: args.trial,
        pilot_length: args.pilot_length,
        snr_db: args.snr_db,
        noise_var: obs.noise_var,
    };
    let mut c = Container::new(&meta)?;
    c.push(container::CHANNEL, ch.cascaded.as_ref());
    c.push(container::SENSING, obs.c_matrix.as_ref());
    c.push(container::EQUIVALENT, obs.omega.as_ref());
    c.push(container::OBSERVATIONS, obs.y.as_ref());
    if args.with_dictionary {
        c.push(container::DICTIONARY, dict.e_mu.as_ref());
    }
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    c.write(&args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn replay(args: &ReplayArgs) -> Result<()> {
    let c = Container::read(&args.input)?;
    let meta: ObservationMeta = c.meta_as()?;
    let cfg = &meta.system;
    let mut solver = SolverConfig::default();
    let mut polar = PolarConfig::default();
    args.solver.apply(&mut solver, &mut polar);
    let methods = args.methods.clone().unwrap_or_else(|| Method::ALL.to_vec());
    if methods.is_empty() {
        bail!("method list is empty");
    }
    let dict = UnifiedDictionary::for_config(cfg)?;
    let basis = if methods.iter().any(|m| m.uses_polar()) {
        Some(PolarGrid::new(cfg, polar)?.cascaded_basis(cfg.n_t))
    } else {
        None
    };
    let problem = Problem {
        y: c.require(container::OBSERVATIONS)?.as_ref(),
        omega: c.require(container::EQUIVALENT)?.as_ref(),
        c_matrix: c.require(container::SENSING)?.as_ref(),
        noise_var: meta.noise_var,
        dict: &dict,
        polar_basis: basis.as_ref().map(|b| b.as_ref()),
        truth: c.get(container::CHANNEL).map(|h| h.as_ref()),
        path_pairs: cfg.n_paths_bs_ris * cfg.n_paths_ris_ue,
    };

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let csv_path = args.out.join("replay.csv");
    let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    w.write_record(["method", "status", "nmse_db", "final_residual", "iterations", "converged"])?;
    let mut diagnostics = Vec::new();
    for &m in &methods {
        match estimate(m, &problem, &solver) {
            Ok(r) => {
                let nmse = r.nmse_db.map(|v| v.to_string()).unwrap_or_default();
                println!("{:<10} nmse {:>10} dB, {} iterations", m.name(), nmse, r.iterations);
                w.write_record([
                    m.name().to_string(),
                    "ok".to_string(),
                    nmse,
                    r.final_residual.to_string(),
                    r.iterations.to_string(),
                    r.converged.to_string(),
                ])?;
                diagnostics.push(serde_json::to_value(r.diagnostics())?);
            }
            Err(e) => {
                println!("{:<10} failed: {e}", m.name());
                w.write_record([m.name(), "error", "", "", "", ""])?;
                diagnostics.push(serde_json::json!({ "method": m, "error": e.to_string() }));
            }
        }
    }
    w.flush()?;
    write_json(&args.out.join("diagnostics.json"), &diagnostics)?;
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::SweepT(a) => sweep_t(a)?,
        Cmd::SweepSnr(a) => sweep_snr(a)?,
        Cmd::EnergyProfile(a) => energy(a)?,
        Cmd::Validate(a) => return validate(a),
        Cmd::Simulate(a) => simulate(a)?,
        Cmd::Replay(a) => replay(a)?,
    }
    Ok(ExitCode::SUCCESS)
}
