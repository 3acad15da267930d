//! Lindblad generator, long-time propagation and steady states.

mod expm;
mod liouvillian;
mod propagate;

pub use expm::{expm, expm_apply};
pub use liouvillian::{build_liouvillian, superoperator, Channel, Jump, Liouvillian};
pub use propagate::{BlockInfo, Propagator, COND_LIMIT, TRACE_DRIFT_TOL};

use crate::error::{Error, Result};
use crate::hilbert::{CompositeBasis, DensityMatrix};
use crate::linalg;

/// One segment of a trajectory with fixed generator.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseInfo {
    pub start: f64,
    pub duration: f64,
    pub pump: bool,
    pub cavity_closed: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Phase index of each sample.
    pub phase: Vec<usize>,
    pub phases: Vec<PhaseInfo>,
    pub description: String,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    /// Samples of one phase as `(t, state)` pairs.
    pub fn phase_samples(&self, k: usize) -> impl Iterator<Item = (f64, &DensityMatrix)> {
        self.times.iter().zip(&self.states).zip(&self.phase).filter(move |(_, p)| **p == k).map(|((t, s), _)| (*t, s))
    }
}

/// ρ(t) = exp(L t/ħ) ρ0 at the requested times (ns).
pub fn propagate(l: &Liouvillian, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    let p = Propagator::new(l)?;
    let states = p.evolve(rho0, times)?;
    let duration = times.last().copied().unwrap_or(0.0);
    Ok(Trajectory {
        times: times.to_vec(),
        phase: vec![0; times.len()],
        states,
        phases: vec![PhaseInfo { start: 0.0, duration, pump: l.rates().gamma_p > 0.0, cavity_closed: true }],
        description: String::from("single generator"),
    })
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// Largest entry of L[ρ], eV.
    pub residual: f64,
}

/// Maximum tolerated residual of a steady state, eV.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-9;

pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    steady_state_report(l).map(|s| s.rho)
}

pub fn steady_state_report(l: &Liouvillian) -> Result<SteadyState> {
    let r = l.rates();
    if r.gamma_p > 0.0 && r.gamma_p >= r.gamma_c {
        return Err(Error::Precondition(format!(
            "pump rate {} GHz is not below cavity loss {} GHz",
            r.gamma_p, r.gamma_c
        )));
    }
    let p = Propagator::new(l)?;
    steady_state_from(l, &p)
}

pub fn steady_state_from(l: &Liouvillian, p: &Propagator) -> Result<SteadyState> {
    let rho = p.kernel_state()?;
    let residual = linalg::max_abs(&l.apply(rho.matrix()));
    if residual > STEADY_RESIDUAL_TOL {
        return Err(Error::NumericalFailure(format!("steady-state residual {residual:.3e} eV")));
    }
    Ok(SteadyState { rho, residual })
}

/// Initial state for the charging protocols.
pub fn ground_state(basis: &CompositeBasis) -> DensityMatrix {
    DensityMatrix::ground(basis)
}
