//! Scripted experiments: charge/relax schedules, cavity-energy sweeps and the
//! detuning feature sweep.

use crate::dynamics::{build_liouvillian, steady_state, PhaseInfo, Propagator, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::{build_basis, CompositeBasis, DensityMatrix};
use crate::model::{build_jc_hamiltonian, build_rabi_hamiltonian, DeviceParams, RateParams};
use crate::observables::{
    emission_features, populations, relative_features, FeatureOptions, FeatureRecord, PopulationRecord,
};
use crate::par::{self, Execution};
use crate::polaritons::polariton_branches;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampling {
    /// `points` log-spaced offsets from `from` to the phase duration.
    Log { from: f64, points: usize },
    /// `points` evenly spaced offsets ending at the phase duration.
    Linear { points: usize },
}

impl Sampling {
    pub fn offsets(&self, duration: f64) -> Result<Vec<f64>> {
        match *self {
            Sampling::Log { from, points } => {
                if points < 2 || !(from > 0.0 && from < duration) {
                    return Err(Error::InvalidParameter(format!(
                        "log sampling needs at least 2 points and 0 < from < duration, got from={from}, duration={duration}"
                    )));
                }
                let (a, b) = (from.ln(), duration.ln());
                let mut v: Vec<f64> =
                    (0..points).map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp()).collect();
                v[points - 1] = duration;
                Ok(v)
            }
            Sampling::Linear { points } => {
                if points < 1 {
                    return Err(Error::InvalidParameter("linear sampling needs at least 1 point".into()));
                }
                Ok((1..=points).map(|k| duration * k as f64 / points as f64).collect())
            }
        }
    }
}

pub const CHARGE_SAMPLING: Sampling = Sampling::Log { from: 1e-3, points: 61 };
pub const RELAX_SAMPLING: Sampling = Sampling::Log { from: 1e-1, points: 91 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Phase {
    pub duration: f64,
    pub pump: bool,
    /// Open cavities have J_D = J_A = J_T = 0 with all rates kept.
    pub cavity_closed: bool,
    pub sampling: Sampling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HamiltonianKind {
    #[default]
    RotatingWave,
    Rabi,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub device: DeviceParams,
    pub rates: RateParams,
    pub theta_deg: f64,
    pub n_max: usize,
    pub hamiltonian: HamiltonianKind,
    pub phases: Vec<Phase>,
}

pub const DEFAULT_N_MAX: usize = 2;

impl Scenario {
    /// Pump for `charge_ns`, then switch the pump off for `relax_ns`.
    pub fn charge_relax(
        device: DeviceParams,
        rates: RateParams,
        charge_ns: f64,
        relax_ns: f64,
        open_cavity_after: bool,
    ) -> Self {
        Self {
            device,
            rates,
            theta_deg: 0.0,
            n_max: DEFAULT_N_MAX,
            hamiltonian: HamiltonianKind::RotatingWave,
            phases: vec![
                Phase { duration: charge_ns, pump: true, cavity_closed: true, sampling: CHARGE_SAMPLING },
                Phase { duration: relax_ns, pump: false, cavity_closed: !open_cavity_after, sampling: RELAX_SAMPLING },
            ],
        }
    }

    pub fn continuous(device: DeviceParams, rates: RateParams, duration: f64) -> Self {
        Self {
            device,
            rates,
            theta_deg: 0.0,
            n_max: DEFAULT_N_MAX,
            hamiltonian: HamiltonianKind::RotatingWave,
            phases: vec![Phase { duration, pump: true, cavity_closed: true, sampling: CHARGE_SAMPLING }],
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn span(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::InvalidParameter("scenario has no phases".into()));
        }
        if let Some(p) = self.phases.iter().find(|p| !(p.duration > 0.0 && p.duration.is_finite())) {
            return Err(Error::InvalidParameter(format!("phase duration {} must be positive", p.duration)));
        }
        self.device.validate()?;
        self.rates.validate()
    }

    fn phase_propagator(&self, phase: &Phase, basis: &CompositeBasis) -> Result<Propagator> {
        let device = if phase.cavity_closed { self.device } else { self.device.uncoupled() };
        let rates = if phase.pump { self.rates } else { self.rates.pump_off() };
        let h = match self.hamiltonian {
            HamiltonianKind::RotatingWave => build_jc_hamiltonian(&device, basis, self.theta_deg)?,
            HamiltonianKind::Rabi => build_rabi_hamiltonian(&device, basis, self.theta_deg)?,
        };
        Propagator::new(&build_liouvillian(&h, &rates, basis)?)
    }
}

fn in_phase<T>(k: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Phase { phase: k, source: Box::new(e) })
}

/// Runs every phase from the ground state, carrying the final state forward.
pub fn run_scenario(s: &Scenario) -> Result<Trajectory> {
    s.validate()?;
    let basis = build_basis(s.n_max)?;
    let mut rho = DensityMatrix::ground(&basis);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![rho.clone()],
        phase: vec![0],
        phases: Vec::with_capacity(s.phases.len()),
        description: String::new(),
    };
    let mut t0 = 0.0;
    for (k, phase) in s.phases.iter().enumerate() {
        let prop = in_phase(k, s.phase_propagator(phase, &basis))?;
        let offsets = in_phase(k, phase.sampling.offsets(phase.duration))?;
        let states = in_phase(k, prop.evolve(&rho, &offsets))?;
        for (tau, st) in offsets.iter().zip(states) {
            traj.times.push(t0 + tau);
            traj.states.push(st);
            traj.phase.push(k);
        }
        rho = traj.states.last().cloned().unwrap_or(rho);
        traj.phases.push(PhaseInfo {
            start: t0,
            duration: phase.duration,
            pump: phase.pump,
            cavity_closed: phase.cavity_closed,
        });
        t0 += phase.duration;
    }
    traj.description = describe(s);
    Ok(traj)
}

fn describe(s: &Scenario) -> String {
    let parts: Vec<String> = s
        .phases
        .iter()
        .map(|p| {
            format!(
                "{} ns pump {} cavity {}",
                p.duration,
                if p.pump { "on" } else { "off" },
                if p.cavity_closed { "closed" } else { "open" }
            )
        })
        .collect();
    format!("omega_c0={} eV, n_max={}: {}", s.device.omega_c0, s.n_max, parts.join("; "))
}

/// State at absolute time `t` (ns) of a scenario started from the ground state.
pub fn state_at(s: &Scenario, t: f64) -> Result<DensityMatrix> {
    s.validate()?;
    if !(t >= 0.0 && t <= s.span()) {
        return Err(Error::InvalidParameter(format!("probe time {t} ns outside scenario span {} ns", s.span())));
    }
    let basis = build_basis(s.n_max)?;
    let mut rho = DensityMatrix::ground(&basis);
    if t == 0.0 {
        return Ok(rho);
    }
    let mut t0 = 0.0;
    for (k, phase) in s.phases.iter().enumerate() {
        let prop = in_phase(k, s.phase_propagator(phase, &basis))?;
        let tau = (t - t0).min(phase.duration);
        rho = in_phase(k, prop.evolve(&rho, &[tau]))?.remove(0);
        if t <= t0 + phase.duration {
            break;
        }
        t0 += phase.duration;
    }
    Ok(rho)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub omega0: f64,
    pub populations: PopulationRecord,
    /// UP, MP, LP, T̃ energies at θ = scenario angle.
    pub branch_energies: [f64; 4],
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub axis: &'static str,
    pub probe_time: f64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Grid value with the largest triplet population.
    pub fn argmax(&self) -> Option<f64> {
        self.points
            .iter()
            .max_by(|a, b| a.populations.p_acceptor_t1.total_cmp(&b.populations.p_acceptor_t1))
            .map(|p| p.omega0)
    }
}

pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect(),
    }
}

/// Triplet population at `probe_time` and branch energies for each cavity energy.
pub fn sweep_cavity_energy(template: &Scenario, grid: &[f64], probe_time: f64, exec: Execution) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InsufficientData { needed: 1, found: 0 });
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("sweep grid must be strictly increasing".into()));
    }
    let basis = build_basis(template.n_max)?;
    let points = par::try_map(exec, grid, |&w| -> Result<SweepPoint> {
        let mut s = template.clone();
        s.device = s.device.with_omega_c0(w);
        let rho = state_at(&s, probe_time)?;
        let pops = PopulationRecord { t: probe_time, ..populations(&rho, &basis)? };
        let b = polariton_branches(&s.device, s.theta_deg)?;
        Ok(SweepPoint { omega0: w, populations: pops, branch_energies: b.map(|x| x.energy) })
    })?;
    Ok(SweepResult { axis: "omega0", probe_time, points })
}

/// Relative emission features of each device, normalized to `reference`.
pub fn sweep_detuning_features(
    devices: &[DeviceParams],
    rates: &RateParams,
    j_t: f64,
    reference: usize,
    opts: &FeatureOptions,
    exec: Execution,
) -> Result<Vec<FeatureRecord>> {
    if devices.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: devices.len() });
    }
    if reference >= devices.len() {
        return Err(Error::InvalidParameter(format!("reference index {reference} out of range")));
    }
    let abs = par::try_map(exec, devices, |d| emission_features(d, rates, j_t, opts))?;
    relative_features(&abs, reference)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// Smallest cutoff whose populations move by less than `tol` at n_max + 1.
    pub n_max: usize,
    pub max_change: f64,
    pub converged: bool,
    pub populations: PopulationRecord,
}

fn population_change(a: &PopulationRecord, b: &PopulationRecord) -> f64 {
    [
        (a.p_ground - b.p_ground).abs(),
        (a.p_donor_s1 - b.p_donor_s1).abs(),
        (a.p_acceptor_s1 - b.p_acceptor_s1).abs(),
        (a.p_acceptor_t1 - b.p_acceptor_t1).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub const CONVERGENCE_TOL: f64 = 1e-3;

/// Raises the cutoff from `n_start` until steady-state populations change by
/// less than `tol` between n_max and n_max + 1.
pub fn converged_steady_state(
    device: &DeviceParams,
    rates: &RateParams,
    theta_deg: f64,
    n_start: usize,
    n_limit: usize,
    tol: f64,
) -> Result<ConvergenceReport> {
    let pops = |n: usize| -> Result<PopulationRecord> {
        let b = build_basis(n)?;
        let h = build_jc_hamiltonian(device, &b, theta_deg)?;
        populations(&steady_state(&build_liouvillian(&h, rates, &b)?)?, &b)
    };
    let mut n = n_start;
    let mut cur = pops(n)?;
    loop {
        let next = pops(n + 1)?;
        let change = population_change(&cur, &next);
        if change < tol || n + 1 >= n_limit {
            return Ok(ConvergenceReport { n_max: n, max_change: change, converged: change < tol, populations: cur });
        }
        n += 1;
        cur = next;
    }
}

/// Same check for every sample of a scenario trajectory.
pub fn converged_scenario(s: &Scenario, n_limit: usize, tol: f64) -> Result<(Trajectory, ConvergenceReport)> {
    let pops_of = |t: &Trajectory, n: usize| -> Result<Vec<PopulationRecord>> {
        let b = build_basis(n)?;
        t.states.iter().map(|r| populations(r, &b)).collect()
    };
    let mut n = s.n_max;
    let mut cur = run_scenario(&s.clone().with_n_max(n))?;
    let mut cur_p = pops_of(&cur, n)?;
    loop {
        let next = run_scenario(&s.clone().with_n_max(n + 1))?;
        let next_p = pops_of(&next, n + 1)?;
        let change = cur_p.iter().zip(&next_p).map(|(a, b)| population_change(a, b)).fold(0.0, f64::max);
        if change < tol || n + 1 >= n_limit {
            let last = *cur_p.last().unwrap();
            return Ok((
                cur,
                ConvergenceReport { n_max: n, max_change: change, converged: change < tol, populations: last },
            ));
        }
        n += 1;
        cur = next;
        cur_p = next_p;
    }
}
