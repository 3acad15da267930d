//! Device and rate parameters, unit conversion and Hamiltonian builders.

use crate::error::{Error, Result};
use crate::hilbert::{
    excitation_number, photon_annihilation, photon_number, projector, transition, CompositeBasis, Level,
    OperatorMatrix, Site,
};
use crate::polaritons::{polariton_branches, BranchLabel};

/// Reduced Planck constant in eV·ns.
pub const HBAR_EV_NS: f64 = 6.582119569e-7;

/// Elementary charge in C (J per eV).
pub const EV_TO_J: f64 = 1.602176634e-19;

pub const DEFAULT_N_EFF: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceParams {
    pub omega_c0: f64,
    pub n_eff: f64,
    pub omega_d: f64,
    pub omega_a: f64,
    pub omega_t: f64,
    pub j_d: f64,
    pub j_a: f64,
    pub j_t: f64,
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let energies = [
            ("omega_c0", self.omega_c0),
            ("omega_d", self.omega_d),
            ("omega_a", self.omega_a),
            ("omega_t", self.omega_t),
        ];
        for (name, v) in energies {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be a positive energy, got {v}")));
            }
        }
        for (name, v) in [("j_d", self.j_d), ("j_a", self.j_a), ("j_t", self.j_t)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.n_eff.is_finite() && self.n_eff >= 1.0) {
            return Err(Error::InvalidParameter(format!("n_eff must be at least 1, got {}", self.n_eff)));
        }
        Ok(())
    }

    /// True when J_D or J_A reaches 0.2 of the smallest bare energy.
    pub fn rwa_warning(&self) -> bool {
        let floor = 0.2 * self.omega_c0.min(self.omega_d).min(self.omega_a);
        self.j_d >= floor || self.j_a >= floor
    }

    /// Same device with all light–matter couplings removed.
    pub fn uncoupled(&self) -> Self {
        Self { j_d: 0.0, j_a: 0.0, j_t: 0.0, ..*self }
    }

    pub fn with_omega_c0(&self, omega_c0: f64) -> Self {
        Self { omega_c0, ..*self }
    }

    pub fn with_j_t(&self, j_t: f64) -> Self {
        Self { j_t, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams {
    pub gamma_p: f64,
    pub gamma_c: f64,
    pub gamma_d: f64,
    pub gamma_a: f64,
    pub gamma_ic: f64,
    pub gamma_isc: f64,
}

impl RateParams {
    pub fn zero() -> Self {
        Self { gamma_p: 0.0, gamma_c: 0.0, gamma_d: 0.0, gamma_a: 0.0, gamma_ic: 0.0, gamma_isc: 0.0 }
    }

    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("gamma_p", self.gamma_p),
            ("gamma_c", self.gamma_c),
            ("gamma_d", self.gamma_d),
            ("gamma_a", self.gamma_a),
            ("gamma_ic", self.gamma_ic),
            ("gamma_isc", self.gamma_isc),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.named() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidRate { name, value });
            }
        }
        Ok(())
    }

    pub fn pump_off(&self) -> Self {
        Self { gamma_p: 0.0, ..*self }
    }
}

pub mod presets {
    use super::{DeviceParams, RateParams, DEFAULT_N_EFF};

    pub const OMEGA_D: f64 = 2.34;
    pub const OMEGA_A: f64 = 2.36;
    pub const OMEGA_T: f64 = 1.75;

    pub fn mechanism1() -> DeviceParams {
        DeviceParams {
            omega_c0: 2.217,
            n_eff: DEFAULT_N_EFF,
            omega_d: 2.34,
            omega_a: 2.55,
            omega_t: 1.75,
            j_d: 0.25,
            j_a: 1e-4,
            j_t: 0.0,
        }
    }

    pub fn mechanism2() -> DeviceParams {
        DeviceParams {
            omega_c0: 1.840,
            n_eff: DEFAULT_N_EFF,
            omega_d: 2.34,
            omega_a: 2.36,
            omega_t: 1.75,
            j_d: 0.25,
            j_a: 1e-4,
            j_t: 1e-4,
        }
    }

    /// Cavity energy, J_D and J_A of the five measured devices, with the
    /// tabulated detuning ΔE in the last column.
    pub const CAVITY_TABLE: [(f64, f64, f64, f64); 5] = [
        (2.12, 0.23, 0.07, 0.216),
        (1.97, 0.23, 0.10, 0.094),
        (1.89, 0.23, 0.07, 0.036),
        (1.88, 0.25, 0.08, 0.011),
        (1.79, 0.27, 0.13, -0.091),
    ];

    /// Measured device `k` (1-based), with J_T = 0.
    pub fn cavity(k: usize) -> Option<DeviceParams> {
        let &(omega_c0, j_d, j_a, _) = CAVITY_TABLE.get(k.checked_sub(1)?)?;
        Some(DeviceParams {
            omega_c0,
            n_eff: DEFAULT_N_EFF,
            omega_d: OMEGA_D,
            omega_a: OMEGA_A,
            omega_t: OMEGA_T,
            j_d,
            j_a,
            j_t: 0.0,
        })
    }

    pub fn cavities() -> Vec<DeviceParams> {
        (1..=5).filter_map(cavity).collect()
    }

    pub fn tabulated_detuning(k: usize) -> Option<f64> {
        CAVITY_TABLE.get(k.checked_sub(1)?).map(|r| r.3)
    }

    pub fn rates_default() -> RateParams {
        RateParams { gamma_p: 10.0, gamma_c: 50.0, gamma_d: 1.0, gamma_a: 1.0, gamma_ic: 1e-4, gamma_isc: 0.48 }
    }
}

/// Planar-microcavity dispersion ω_C(θ) = ω_C(0)/√(1 − sin²θ/n_eff²).
pub fn cavity_energy(omega_c0: f64, n_eff: f64, theta_deg: f64) -> Result<f64> {
    if !(theta_deg.abs() < 90.0) {
        return Err(Error::Domain(format!("angle {theta_deg} deg outside (-90, 90)")));
    }
    if !(n_eff >= 1.0) {
        return Err(Error::Domain(format!("n_eff {n_eff} below 1")));
    }
    let s = theta_deg.to_radians().sin() / n_eff;
    let arg = 1.0 - s * s;
    if arg <= 0.0 {
        return Err(Error::Domain(format!("evanescent regime at {theta_deg} deg")));
    }
    Ok(omega_c0 / arg.sqrt())
}

/// ħγ in eV for a rate in GHz.
pub fn rate_to_energy(gamma_ghz: f64) -> Result<f64> {
    if !(gamma_ghz.is_finite() && gamma_ghz >= 0.0) {
        return Err(Error::InvalidRate { name: "gamma", value: gamma_ghz });
    }
    Ok(HBAR_EV_NS * gamma_ghz)
}

struct Parts {
    bare: OperatorMatrix,
    a: OperatorMatrix,
    sp_d: OperatorMatrix,
    sp_a: OperatorMatrix,
    sp_t: OperatorMatrix,
}

fn parts(device: &DeviceParams, basis: &CompositeBasis, theta_deg: f64) -> Result<Parts> {
    device.validate()?;
    if device.rwa_warning() {
        log::warn!(
            "coupling J_D={} / J_A={} eV exceeds 0.2 of the smallest bare energy; rotating-wave results may be unreliable",
            device.j_d,
            device.j_a
        );
    }
    let omega_c = cavity_energy(device.omega_c0, device.n_eff, theta_deg)?;
    let bare = photon_number(basis)
        .scaled(omega_c)
        .add(&projector(basis, Site::Donor, Level::S1)?.scaled(device.omega_d))?
        .add(&projector(basis, Site::Acceptor, Level::S1)?.scaled(device.omega_a))?
        .add(&projector(basis, Site::Acceptor, Level::T1)?.scaled(device.omega_t))?;
    Ok(Parts {
        bare,
        a: photon_annihilation(basis),
        sp_d: transition(basis, Site::Donor, Level::S0, Level::S1)?,
        sp_a: transition(basis, Site::Acceptor, Level::S0, Level::S1)?,
        sp_t: transition(basis, Site::Acceptor, Level::S0, Level::T1)?,
    })
}

/// Rotating-wave Hamiltonian with the cavity–triplet term J_T(|T1⟩⟨S0|_A a + h.c.).
pub fn build_jc_hamiltonian(device: &DeviceParams, basis: &CompositeBasis, theta_deg: f64) -> Result<OperatorMatrix> {
    let p = parts(device, basis, theta_deg)?;
    let mut h = p.bare;
    for (j, sp) in [(device.j_d, &p.sp_d), (device.j_a, &p.sp_a), (device.j_t, &p.sp_t)] {
        if j == 0.0 {
            continue;
        }
        let term = sp.mul(&p.a)?;
        h = h.add(&term.add(&term.dagger())?.scaled(j))?;
    }
    Ok(h)
}

/// Hamiltonian with the counter-rotating terms kept: J σ_x (a + a†) per transition.
pub fn build_rabi_hamiltonian(device: &DeviceParams, basis: &CompositeBasis, theta_deg: f64) -> Result<OperatorMatrix> {
    let p = parts(device, basis, theta_deg)?;
    let x = p.a.add(&p.a.dagger())?;
    let mut h = p.bare;
    for (j, sp) in [(device.j_d, &p.sp_d), (device.j_a, &p.sp_a), (device.j_t, &p.sp_t)] {
        if j == 0.0 {
            continue;
        }
        let sx = sp.add(&sp.dagger())?;
        h = h.add(&sx.mul(&x)?.scaled(j))?;
    }
    Ok(h)
}

/// ‖[H, N]‖ as the largest entry of the commutator.
pub fn number_commutator_norm(h: &OperatorMatrix, basis: &CompositeBasis) -> Result<f64> {
    Ok(h.commutator(&excitation_number(basis))?.max_abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Mechanism1,
    Mechanism2,
    Both,
    Neither,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MechanismReport {
    /// γ_ISC exceeds γ_C, γ_D and γ_A.
    pub isc_dominant: bool,
    /// Bright branch within `tol` of ω_A.
    pub acceptor_resonance: Option<BranchLabel>,
    /// Bright branch within `tol` of ω_T, with J_T > 0.
    pub triplet_resonance: Option<BranchLabel>,
    pub verdict: Verdict,
}

/// Minimum cavity weight for a branch to count as bright.
pub const BRIGHT_CAVITY_WEIGHT: f64 = 0.05;

pub fn classify_regime(device: &DeviceParams, rates: &RateParams, theta_deg: f64, tol: f64) -> Result<MechanismReport> {
    rates.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let isc_dominant =
        rates.gamma_isc > rates.gamma_c && rates.gamma_isc > rates.gamma_d && rates.gamma_isc > rates.gamma_a;
    let branches = polariton_branches(device, theta_deg)?;
    let bright: Vec<_> =
        branches.iter().filter(|b| b.label != BranchLabel::TTilde && b.character[0] >= BRIGHT_CAVITY_WEIGHT).collect();
    let closest = |target: f64| {
        bright
            .iter()
            .filter(|b| (b.energy - target).abs() <= tol)
            .min_by(|x, y| (x.energy - target).abs().total_cmp(&(y.energy - target).abs()))
            .map(|b| b.label)
    };
    let acceptor_resonance = closest(device.omega_a);
    let triplet_resonance = if device.j_t > 0.0 { closest(device.omega_t) } else { None };
    let verdict = match (acceptor_resonance.is_some(), triplet_resonance.is_some()) {
        (true, true) => Verdict::Both,
        (true, false) => Verdict::Mechanism1,
        (false, true) => Verdict::Mechanism2,
        (false, false) => Verdict::Neither,
    };
    Ok(MechanismReport { isc_dominant, acceptor_resonance, triplet_resonance, verdict })
}
