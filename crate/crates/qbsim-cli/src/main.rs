//! `qbsim`: simulations, sweeps, polariton analysis and fits from the command line.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qbsim::fitting::{
    self, fit_coupled_oscillator_with, fit_triplet_coupling_with, synthesize_dispersion, DispersionFitOptions,
    DispersionParam, FeatureWeights, TripletFitOptions,
};
use qbsim::hilbert::build_basis;
use qbsim::model::{presets, DeviceParams};
use qbsim::observables::{trajectory_populations, FeatureOptions};
use qbsim::polaritons::polariton_branches;
use qbsim::protocols::{
    converged_scenario, linspace, run_scenario, sweep_cavity_energy, sweep_detuning_features, Phase, Scenario,
    CHARGE_SAMPLING, CONVERGENCE_TOL, DEFAULT_N_MAX, RELAX_SAMPLING,
};
use qbsim::{Error, Execution};

use config::{ConfigError, RunConfig};
use output::Writer;

const N_MAX_LIMIT: usize = 6;

#[derive(Parser)]
#[command(name = "qbsim", version, about = "Cavity quantum battery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// mechanism1, mechanism2, cavity1..cavity5 or rates-default.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and fit ensembles (0 = all cores); falls back to QBSIM_JOBS.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Fixed photon cutoff; automatic escalation when omitted.
    #[arg(long, global = true)]
    n_max: Option<usize>,
    /// Detection angle in degrees.
    #[arg(long, global = true)]
    theta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Charge/relax trajectory -> trajectory.csv
    Simulate {
        /// Pump-on duration; the config scenario is used when neither time is given.
        #[arg(long)]
        charge_ns: Option<f64>,
        /// Pump-off duration (0 omits the relax phase).
        #[arg(long)]
        relax_ns: Option<f64>,
        /// Open the cavity (J = 0) during relaxation.
        #[arg(long)]
        open_after: bool,
    },
    /// Cavity-energy sweep -> sweep.csv
    Sweep {
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        probe_ns: Option<f64>,
    },
    /// Branch energies and characters -> branches.csv
    Polaritons {
        /// Last angle of an evenly spaced grid starting at --theta.
        #[arg(long)]
        theta_to: Option<f64>,
        #[arg(long, default_value_t = 1)]
        theta_steps: usize,
    },
    /// Coupled-oscillator fit of dispersion data -> fit.csv
    FitDispersion {
        /// CSV with theta_deg, branch, energy_ev[, weight].
        #[arg(long)]
        data: Option<PathBuf>,
        /// Synthesize data from the configured device with this noise (eV) instead of reading a file.
        #[arg(long)]
        synthesize_sigma: Option<f64>,
        /// Preset used as the initial guess (defaults to the configured device).
        #[arg(long)]
        init: Option<String>,
        /// Comma-separated free parameters.
        #[arg(long, value_delimiter = ',')]
        free: Option<Vec<String>>,
        /// Allow omega_d and omega_a among the free parameters.
        #[arg(long)]
        free_exciton_energies: bool,
    },
    /// Triplet-coupling fit against relative emission features -> fit.csv
    FitJt {
        /// CSV with delta_e_ev, rel_fluor, rel_sharp, rel_phos_rate, one row per measured cavity.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Synthesize features at this J_T (eV) instead of reading a file.
        #[arg(long)]
        synthesize_jt: Option<f64>,
        #[arg(long)]
        jt_min: Option<f64>,
        #[arg(long)]
        jt_max: Option<f64>,
        /// Reference cavity (1-based) the features are normalized to.
        #[arg(long, default_value_t = 1)]
        reference: usize,
        /// Weights of fluorescence, sharpness and phosphorescence rate.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        weights: Option<Vec<f64>>,
    },
    /// All CSVs consumed by the plotting tool.
    FiguresData {
        #[arg(long, default_value_t = 100)]
        sweep_steps: usize,
        #[arg(long, default_value_t = 1e8)]
        relax_ns: f64,
        /// Triplet coupling for the feature table, eV.
        #[arg(long, default_value_t = 5e-3)]
        j_t: f64,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let numerical = e.is_numerical() || matches!(e, Error::NonFiniteObjective(_) | Error::AmbiguousLabeling(..));
        if numerical {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

#[derive(Serialize)]
struct Metadata {
    command: String,
    version: &'static str,
    preset: Option<String>,
    seed: u64,
    n_max: Option<usize>,
    n_max_converged: Option<bool>,
    files: Vec<String>,
    warnings: Vec<String>,
    config: RunConfig,
}

struct Ctx {
    cfg: RunConfig,
    common: Common,
    exec: Execution,
    out: Writer,
    meta: Metadata,
}

impl Ctx {
    fn device(&self) -> Result<DeviceParams, Failure> {
        let p = self.common.preset.as_deref().filter(|p| *p != "rates-default");
        Ok(self.cfg.device_with(p)?)
    }

    fn theta(&self) -> f64 {
        self.common.theta.or(self.cfg.geometry.theta_deg).unwrap_or(0.0)
    }

    fn fixed_n_max(&self) -> Option<usize> {
        self.common.n_max.or(self.cfg.geometry.n_max)
    }

    fn scenario(&self, device: DeviceParams, phases: Vec<Phase>) -> Scenario {
        Scenario {
            device,
            rates: self.cfg.rates(),
            theta_deg: self.theta(),
            n_max: self.fixed_n_max().unwrap_or(DEFAULT_N_MAX),
            hamiltonian: Default::default(),
            phases,
        }
    }

    /// Runs a scenario at the fixed cutoff, or escalates it until populations converge.
    fn trajectory(&mut self, s: &Scenario, name: &str) -> Result<(), Failure> {
        let traj = if self.fixed_n_max().is_some() {
            self.meta.n_max = Some(s.n_max);
            run_scenario(s)?
        } else {
            let (t, rep) = converged_scenario(s, N_MAX_LIMIT, CONVERGENCE_TOL)?;
            self.meta.n_max = Some(rep.n_max);
            self.meta.n_max_converged = Some(rep.converged);
            if !rep.converged {
                let msg = format!("{name}: populations still change by {:.2e} at n_max {}", rep.max_change, rep.n_max);
                log::warn!("{msg}");
                self.meta.warnings.push(msg);
            }
            t
        };
        let basis = build_basis(traj.states[0].n_max())?;
        let rows = trajectory_populations(&traj, &basis)?;
        self.out.trajectory(name, &rows, &traj.phase)?;
        Ok(())
    }
}

fn charge_relax_phases(charge: f64, relax: f64, open_after: bool) -> Vec<Phase> {
    let mut v = vec![Phase { duration: charge, pump: true, cavity_closed: true, sampling: CHARGE_SAMPLING }];
    if relax > 0.0 {
        v.push(Phase { duration: relax, pump: false, cavity_closed: !open_after, sampling: RELAX_SAMPLING });
    }
    v
}

fn simulate(ctx: &mut Ctx, charge: Option<f64>, relax: Option<f64>, open_after: bool) -> Result<(), Failure> {
    let phases = match (charge, relax, ctx.cfg.phases()) {
        (None, None, Some(p)) => p,
        (c, r, _) => charge_relax_phases(c.unwrap_or(100.0), r.unwrap_or(0.0), open_after),
    };
    let s = ctx.scenario(ctx.device()?, phases);
    ctx.trajectory(&s, "trajectory.csv")
}

fn sweep(
    ctx: &mut Ctx,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
    probe: Option<f64>,
) -> Result<(), Failure> {
    let sec = ctx.cfg.sweep.clone();
    let pick = |flag: Option<f64>, cfg: Option<f64>, name: &str| {
        flag.or(cfg).ok_or_else(|| Failure::Config(format!("sweep needs --{name} or a sweep section")))
    };
    let from = pick(from, sec.as_ref().map(|s| s.from), "from")?;
    let to = pick(to, sec.as_ref().map(|s| s.to), "to")?;
    let probe = pick(probe, sec.as_ref().map(|s| s.probe_time_ns), "probe-ns")?;
    let steps = steps.or(sec.as_ref().map(|s| s.steps)).unwrap_or(100);
    if steps == 0 || to < from || (steps > 1 && to == from) {
        return Err(Failure::Config(format!("invalid sweep grid [{from}, {to}] x {steps}")));
    }
    let grid = linspace(from, to, steps);
    let phases = ctx.cfg.phases().unwrap_or_else(|| charge_relax_phases(probe, 0.0, false));
    let s = ctx.scenario(ctx.device()?, phases);
    ctx.meta.n_max = Some(s.n_max);
    let r = sweep_cavity_energy(&s, &grid, probe, ctx.exec)?;
    ctx.out.sweep("sweep.csv", &r)?;
    Ok(())
}

fn branch_rows(
    device: &DeviceParams,
    thetas: &[f64],
) -> Result<Vec<(f64, [qbsim::polaritons::PolaritonBranch; 4])>, Failure> {
    thetas.iter().map(|&t| Ok((t, polariton_branches(device, t)?))).collect()
}

fn polaritons(ctx: &mut Ctx, theta_to: Option<f64>, steps: usize) -> Result<(), Failure> {
    let t0 = ctx.theta();
    let thetas = match theta_to {
        Some(t1) if steps >= 2 => linspace(t0, t1, steps),
        Some(_) => return Err(Failure::Config("--theta-to needs --theta-steps >= 2".into())),
        None => vec![t0],
    };
    let rows = branch_rows(&ctx.device()?, &thetas)?;
    ctx.out.branches("branches.csv", &rows)?;
    Ok(())
}

fn fit_dispersion(
    ctx: &mut Ctx,
    data: Option<PathBuf>,
    sigma: Option<f64>,
    init: Option<String>,
    free: Option<Vec<String>>,
    free_excitons: bool,
) -> Result<(), Failure> {
    let device = ctx.device()?;
    let data = match (sigma, data.or(ctx.cfg.fit.data.clone())) {
        (Some(s), _) => {
            let angles: Vec<f64> = (0..=6).map(|k| 10.0 * k as f64).collect();
            let d = synthesize_dispersion(&device, &angles, s, ctx.common.seed)?;
            ctx.out.raw("dispersion.csv", |w| fitting::io::write_dispersion(&d, w))?;
            d
        }
        (None, Some(path)) => fitting::io::read_dispersion_file(&path)?,
        (None, None) => {
            return Err(Failure::Config("fit-dispersion needs --data, fit.data or --synthesize-sigma".into()))
        }
    };
    let guess = match init {
        Some(p) => config::device_preset(&p)?,
        None => device,
    };
    let names = free
        .or(ctx.cfg.fit.free.clone())
        .unwrap_or_else(|| DispersionParam::DEFAULT_FREE.map(|p| p.name().to_string()).into());
    let free: Vec<DispersionParam> =
        names.iter().map(|n| DispersionParam::from_name(n.trim())).collect::<Result<_, _>>()?;
    let bounds = ctx
        .cfg
        .fit
        .bounds
        .iter()
        .map(|(k, [lo, hi])| Ok((DispersionParam::from_name(k)?, (*lo, *hi))))
        .collect::<Result<Vec<_>, Error>>()?;
    let opts = DispersionFitOptions { free_exciton_energies: free_excitons, bounds, ..Default::default() };
    let fit = fit_coupled_oscillator_with(&data, &guess, &free, &opts)?;
    ctx.meta.warnings.extend(fit.result.warnings.iter().cloned());
    ctx.out.fit("fit.csv", &fit.result, &[])?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fit_jt(
    ctx: &mut Ctx,
    features: Option<PathBuf>,
    synth: Option<f64>,
    jt_min: Option<f64>,
    jt_max: Option<f64>,
    reference: usize,
    weights: Option<Vec<f64>>,
) -> Result<(), Failure> {
    let devices = presets::cavities();
    let rates = ctx.cfg.rates();
    let reference = reference
        .checked_sub(1)
        .filter(|&r| r < devices.len())
        .ok_or_else(|| Failure::Config(format!("--reference must be 1..={}", devices.len())))?;
    let fopts = FeatureOptions {
        theta_deg: ctx.theta(),
        n_max: ctx.fixed_n_max().unwrap_or(DEFAULT_N_MAX),
        ..Default::default()
    };
    let measured = match (synth, features.or(ctx.cfg.fit.data.clone())) {
        (Some(j), _) => {
            let f = sweep_detuning_features(&devices, &rates, j, reference, &fopts, ctx.exec)?;
            ctx.out.features("features.csv", &f)?;
            f
        }
        (None, Some(path)) => fitting::io::read_features_file(&path)?,
        (None, None) => return Err(Failure::Config("fit-jt needs --features, fit.data or --synthesize-jt".into())),
    };
    let cfg_bounds = ctx.cfg.fit.bounds.get("j_t").copied().unwrap_or([1e-4, 2e-2]);
    let bounds = (jt_min.unwrap_or(cfg_bounds[0]), jt_max.unwrap_or(cfg_bounds[1]));
    let weights = match weights.as_deref() {
        Some([f, s, p]) => FeatureWeights { fluorescence: *f, sharpness: *s, phosphorescence: *p },
        _ => FeatureWeights::default(),
    };
    let opts = TripletFitOptions { weights, features: fopts, reference, ..Default::default() };
    let fit = fit_triplet_coupling_with(&measured, &devices, &rates, bounds, &opts)?;
    ctx.meta.warnings.extend(fit.result.warnings.iter().cloned());
    let [a, b, c] = fit.per_feature;
    ctx.out.fit("fit.csv", &fit.result, &[("ssr_fluor", a), ("ssr_sharp", b), ("ssr_phos_rate", c)])?;
    Ok(())
}

fn figures_data(ctx: &mut Ctx, sweep_steps: usize, relax_ns: f64, j_t: f64) -> Result<(), Failure> {
    for (name, d) in [("mechanism1", presets::mechanism1()), ("mechanism2", presets::mechanism2())] {
        let s = ctx.scenario(d, charge_relax_phases(100.0, relax_ns, false));
        ctx.trajectory(&s, &format!("dynamics_{name}.csv"))?;
        let thetas = linspace(0.0, 60.0, 61);
        let rows = branch_rows(&d, &thetas)?;
        ctx.out.branches(&format!("branches_{name}.csv"), &rows)?;
    }
    if sweep_steps > 0 {
        let s = ctx.scenario(presets::mechanism2(), charge_relax_phases(10.0, 0.0, false));
        let r = sweep_cavity_energy(&s, &linspace(1.6, 2.1, sweep_steps), 10.0, ctx.exec)?;
        ctx.out.sweep("sweep_mechanism2.csv", &r)?;
    }
    let fopts = FeatureOptions { theta_deg: ctx.theta(), ..Default::default() };
    let f = sweep_detuning_features(&presets::cavities(), &ctx.cfg.rates(), j_t, 0, &fopts, ctx.exec)?;
    ctx.out.features("features.csv", &f)?;
    Ok(())
}

fn jobs(flag: Option<usize>) -> Result<usize, Failure> {
    match flag {
        Some(j) => Ok(j),
        None => match std::env::var("QBSIM_JOBS") {
            Ok(v) => v.trim().parse().map_err(|_| Failure::Config(format!("QBSIM_JOBS={v:?} is not a thread count"))),
            Err(_) => Ok(0),
        },
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.common.config {
        Some(p) => config::parse_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = cli.common.preset.as_deref().filter(|p| *p != "rates-default") {
        config::device_preset(p)?;
    }
    let exec = Execution::from_jobs(jobs(cli.common.jobs)?);
    let dir = cli.common.out.clone().or(cfg.output.directory.clone()).unwrap_or_else(|| PathBuf::from("."));
    let out = Writer::new(&dir, cfg.precision())?;
    let command = match &cli.command {
        Command::Simulate { .. } => "simulate",
        Command::Sweep { .. } => "sweep",
        Command::Polaritons { .. } => "polaritons",
        Command::FitDispersion { .. } => "fit-dispersion",
        Command::FitJt { .. } => "fit-jt",
        Command::FiguresData { .. } => "figures-data",
    };
    let meta = Metadata {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION"),
        preset: cli.common.preset.clone().or(cfg.preset.clone()),
        seed: cli.common.seed,
        n_max: None,
        n_max_converged: None,
        files: Vec::new(),
        warnings: Vec::new(),
        config: cfg.clone(),
    };
    let mut ctx = Ctx { cfg, common: cli.common, exec, out, meta };
    if let Some(n) = ctx.fixed_n_max() {
        build_basis(n)?;
    }
    match cli.command {
        Command::Simulate { charge_ns, relax_ns, open_after } => simulate(&mut ctx, charge_ns, relax_ns, open_after)?,
        Command::Sweep { from, to, steps, probe_ns } => sweep(&mut ctx, from, to, steps, probe_ns)?,
        Command::Polaritons { theta_to, theta_steps } => polaritons(&mut ctx, theta_to, theta_steps)?,
        Command::FitDispersion { data, synthesize_sigma, init, free, free_exciton_energies } => {
            fit_dispersion(&mut ctx, data, synthesize_sigma, init, free, free_exciton_energies)?
        }
        Command::FitJt { features, synthesize_jt, jt_min, jt_max, reference, weights } => {
            fit_jt(&mut ctx, features, synthesize_jt, jt_min, jt_max, reference, weights)?
        }
        Command::FiguresData { sweep_steps, relax_ns, j_t } => figures_data(&mut ctx, sweep_steps, relax_ns, j_t)?,
    }
    ctx.meta.files = ctx.out.written().to_vec();
    ctx.out.metadata(&format!("{command}.meta.json"), &ctx.meta)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
