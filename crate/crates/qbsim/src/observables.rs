//! Populations, emission proxies and battery figures of merit.

use crate::dynamics::{build_liouvillian, steady_state, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::{build_basis, CompositeBasis, DensityMatrix};
use crate::model::{build_jc_hamiltonian, DeviceParams, RateParams, EV_TO_J, HBAR_EV_NS};
use crate::polaritons::{
    branch, damped_branches, detuning, effective_triplet_lifetime, polariton_branches, BranchLabel,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PopulationRecord {
    pub t: f64,
    pub p_ground: f64,
    pub mean_photons: f64,
    pub p_donor_s1: f64,
    pub p_acceptor_s1: f64,
    pub p_acceptor_t1: f64,
}

pub fn populations(rho: &DensityMatrix, basis: &CompositeBasis) -> Result<PopulationRecord> {
    if rho.n_max() != basis.n_max() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: rho.dim() });
    }
    let mut rec = PopulationRecord {
        t: 0.0,
        p_ground: rho.population(basis.ground_index()),
        mean_photons: 0.0,
        p_donor_s1: 0.0,
        p_acceptor_s1: 0.0,
        p_acceptor_t1: 0.0,
    };
    for i in 0..basis.dim() {
        let p = rho.population(i);
        let (n, d, a) = basis.unindex(i);
        rec.mean_photons += n as f64 * p;
        if d == 1 {
            rec.p_donor_s1 += p;
        }
        match a {
            1 => rec.p_acceptor_t1 += p,
            2 => rec.p_acceptor_s1 += p,
            _ => {}
        }
    }
    Ok(rec)
}

pub fn trajectory_populations(traj: &Trajectory, basis: &CompositeBasis) -> Result<Vec<PopulationRecord>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| populations(s, basis).map(|r| PopulationRecord { t, ..r }))
        .collect()
}

/// ω_T · p_T in eV per acceptor.
pub fn stored_energy_density(rho: &DensityMatrix, device: &DeviceParams, basis: &CompositeBasis) -> Result<f64> {
    Ok(device.omega_t * populations(rho, basis)?.p_acceptor_t1)
}

/// ρ_E = p_T1 · E_T1 · ρ_T1 in eV cm⁻³.
pub fn volumetric_energy_density(p_t1: f64, e_t1: f64, rho_t1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_t1) {
        return Err(Error::Domain(format!("triplet fraction {p_t1} outside [0, 1]")));
    }
    if !(e_t1 > 0.0 && rho_t1 > 0.0) {
        return Err(Error::Domain("triplet energy and density must be positive".into()));
    }
    Ok(p_t1 * e_t1 * rho_t1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capacity {
    pub ev_total: f64,
    pub watt_hours: f64,
}

pub fn battery_capacity(e_t1: f64, n_t1: f64) -> Result<Capacity> {
    if !(e_t1 >= 0.0 && n_t1 >= 0.0) {
        return Err(Error::Domain("triplet energy and count must be non-negative".into()));
    }
    let ev_total = e_t1 * n_t1;
    Ok(Capacity { ev_total, watt_hours: ev_to_watt_hours(ev_total) })
}

pub fn ev_to_watt_hours(ev: f64) -> f64 {
    ev * EV_TO_J / 3600.0
}

/// RMS log-residual above which a decay is flagged as not single-exponential.
pub const SINGLE_EXP_RESIDUAL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentialFit {
    /// ns⁻¹.
    pub rate: f64,
    pub amplitude: f64,
    /// RMS residual of ln(value).
    pub residual: f64,
    pub single_exponential: bool,
}

/// Least-squares line through ln(value) against t inside `window`.
pub fn fit_exponential_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<ExponentialFit> {
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| *t >= window.0 && *t <= window.1).collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientData { needed: 5, found: pts.len() });
    }
    if let Some(&(t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!("non-positive value {v} at t = {t}; cannot fit a logarithm")));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(t, v) in &pts {
        sxx += (t - tm) * (t - tm);
        sxy += (t - tm) * (v.ln() - ym);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData { needed: 2, found: 1 });
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let residual = (pts.iter().map(|&(t, v)| (v.ln() - intercept - slope * t).powi(2)).sum::<f64>() / n).sqrt();
    Ok(ExponentialFit {
        rate: (-slope).max(0.0),
        amplitude: intercept.exp(),
        residual,
        single_exponential: residual <= SINGLE_EXP_RESIDUAL,
    })
}

/// Piecewise-linear (trapezoid) integral of sampled data over `[a, b]`.
pub fn trapezoid_integral(series: &[(f64, f64)], a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Domain(format!("integration window [{a}, {b}] is empty")));
    }
    if series.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: series.len() });
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Domain("sample abscissae must be strictly increasing".into()));
    }
    let (x0, xn) = (series[0].0, series[series.len() - 1].0);
    if a < x0 || b > xn {
        return Err(Error::Domain(format!("window [{a}, {b}] outside samples [{x0}, {xn}]")));
    }
    let mut total = 0.0;
    for w in series.windows(2) {
        let ((xl, fl), (xr, fr)) = (w[0], w[1]);
        let lo = xl.max(a);
        let hi = xr.min(b);
        if hi <= lo {
            continue;
        }
        if lo == xl && hi == xr {
            total += 0.5 * (xr - xl) * (fl + fr);
        } else {
            let f = |x: f64| fl + (fr - fl) * (x - xl) / (xr - xl);
            total += 0.5 * (hi - lo) * (f(lo) + f(hi));
        }
    }
    Ok(total)
}

/// Photon flux out of the radiative channels, ns⁻¹.
pub fn radiative_flux(rho: &DensityMatrix, rates: &RateParams, basis: &CompositeBasis) -> Result<f64> {
    let p = populations(rho, basis)?;
    Ok(rates.gamma_c * p.mean_photons + rates.gamma_d * p.p_donor_s1 + rates.gamma_a * p.p_acceptor_s1)
}

/// γ_IC · p_T1, ns⁻¹.
pub fn phosphorescence_intensity(rho: &DensityMatrix, rates: &RateParams, basis: &CompositeBasis) -> Result<f64> {
    Ok(rates.gamma_ic * populations(rho, basis)?.p_acceptor_t1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyFigures {
    /// Peak d(ω_T p_T)/dt while pumping, eV/ns.
    pub charging_power: f64,
    /// ω_T p_T at the end of pumping, eV per acceptor.
    pub stored_density: f64,
    /// Inverse fitted triplet decay rate after pumping, ns.
    pub self_discharge_time: f64,
    pub discharge_fit: Option<ExponentialFit>,
}

/// Triplet populations below this are treated as empty when fitting decays.
pub const TRIPLET_FLOOR: f64 = 1e-9;

pub fn charging_metrics(traj: &Trajectory, device: &DeviceParams, basis: &CompositeBasis) -> Result<EnergyFigures> {
    let charge =
        traj.phases.iter().rposition(|p| p.pump).ok_or_else(|| Error::IncompleteScenario("no pump-on phase".into()))?;
    let relax = (charge + 1..traj.phases.len())
        .find(|&k| !traj.phases[k].pump)
        .ok_or_else(|| Error::IncompleteScenario("no pump-off phase after charging".into()))?;

    let energy = |s: &DensityMatrix| populations(s, basis).map(|p| device.omega_t * p.p_acceptor_t1);
    let on: Vec<(f64, f64)> =
        traj.phase_samples(charge).map(|(t, s)| energy(s).map(|e| (t, e))).collect::<Result<_>>()?;
    if on.is_empty() {
        return Err(Error::IncompleteScenario("pump-on phase has no samples".into()));
    }
    let mut charging_power: f64 = 0.0;
    for k in 0..on.len() {
        let (l, r) = (k.saturating_sub(1), (k + 1).min(on.len() - 1));
        if r > l {
            charging_power = charging_power.max((on[r].1 - on[l].1) / (on[r].0 - on[l].0));
        }
    }
    let stored_density = on[on.len() - 1].1;

    let start = traj.phases[relax].start;
    let off: Vec<(f64, f64)> = traj
        .phase_samples(relax)
        .map(|(t, s)| populations(s, basis).map(|p| (t - start, p.p_acceptor_t1)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(_, p)| *p > TRIPLET_FLOOR)
        .collect();
    let (self_discharge_time, discharge_fit) = if off.len() >= 5 {
        let fit = fit_exponential_decay(&off, (0.0, f64::INFINITY))?;
        (if fit.rate > 0.0 { 1.0 / fit.rate } else { f64::INFINITY }, Some(fit))
    } else {
        (f64::INFINITY, None)
    };
    Ok(EnergyFigures { charging_power, stored_density, self_discharge_time, discharge_fit })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FluorescenceProxy {
    /// Steady-state γ_C⟨a†a⟩ + γ_D p_D,S1 + γ_A p_A,S1 under continuous pumping.
    #[default]
    RadiativeFlux,
    /// Non-triplet weight of the lower polariton.
    BrightWeight,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmissionFeatures {
    pub delta_e: f64,
    pub fluorescence: f64,
    /// 1/FWHM of the lower polariton, eV⁻¹.
    pub sharpness: f64,
    /// Inverse effective triplet lifetime, ns⁻¹.
    pub phosphorescence_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureOptions {
    pub theta_deg: f64,
    pub n_max: usize,
    pub fluorescence: FluorescenceProxy,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self { theta_deg: 0.0, n_max: 2, fluorescence: FluorescenceProxy::RadiativeFlux }
    }
}

/// Absolute emission features of one device with the triplet coupling set to `j_t`.
pub fn emission_features(
    device: &DeviceParams,
    rates: &RateParams,
    j_t: f64,
    opts: &FeatureOptions,
) -> Result<EmissionFeatures> {
    let dev = device.with_j_t(j_t);
    let delta_e = detuning(&dev, opts.theta_deg)?.delta_e;
    let damped = damped_branches(&dev, rates, opts.theta_deg)?;
    let lp = damped
        .iter()
        .find(|b| b.label == BranchLabel::LP)
        .copied()
        .ok_or_else(|| Error::NumericalFailure("lower polariton missing from damped spectrum".into()))?;
    if !(lp.fwhm > 0.0) {
        return Err(Error::Domain("lower polariton has no linewidth; cavity and exciton losses are zero".into()));
    }
    let herm = polariton_branches(&dev, opts.theta_deg)?;
    let fluorescence = match opts.fluorescence {
        FluorescenceProxy::RadiativeFlux => {
            let basis = build_basis(opts.n_max)?;
            let h = build_jc_hamiltonian(&dev, &basis, opts.theta_deg)?;
            let l = build_liouvillian(&h, rates, &basis)?;
            radiative_flux(&steady_state(&l)?, rates, &basis)?
        }
        FluorescenceProxy::BrightWeight => 1.0 - branch(&herm, BranchLabel::LP).character[3],
    };
    if !(rates.gamma_ic > 0.0) {
        return Err(Error::Domain("phosphorescence rate needs a non-zero internal conversion rate".into()));
    }
    let p_t = branch(&herm, BranchLabel::TTilde).character[3];
    let tau_t = 1.0 / rates.gamma_ic;
    let tau_p = HBAR_EV_NS / lp.fwhm;
    let tau = effective_triplet_lifetime(p_t, tau_t, 1.0 - p_t, tau_p)?;
    Ok(EmissionFeatures { delta_e, fluorescence, sharpness: 1.0 / lp.fwhm, phosphorescence_rate: 1.0 / tau })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureRecord {
    pub delta_e: f64,
    pub rel_fluorescence_intensity: f64,
    pub rel_sharpness: f64,
    pub rel_phosphorescence_rate: f64,
}

/// Normalizes absolute features to the entry at `reference`.
pub fn relative_features(abs: &[EmissionFeatures], reference: usize) -> Result<Vec<FeatureRecord>> {
    let r = abs
        .get(reference)
        .ok_or_else(|| Error::InvalidParameter(format!("reference index {reference} out of range")))?;
    Ok(abs
        .iter()
        .map(|f| FeatureRecord {
            delta_e: f.delta_e,
            rel_fluorescence_intensity: f.fluorescence / r.fluorescence,
            rel_sharpness: f.sharpness / r.sharpness,
            rel_phosphorescence_rate: f.phosphorescence_rate / r.phosphorescence_rate,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Level;
    use crate::model::presets;

    #[test]
    fn ground_populations() {
        let b = build_basis(2).unwrap();
        let p = populations(&DensityMatrix::ground(&b), &b).unwrap();
        assert_eq!(
            (p.p_ground, p.mean_photons, p.p_donor_s1, p.p_acceptor_s1, p.p_acceptor_t1),
            (1.0, 0.0, 0.0, 0.0, 0.0)
        );
        let t = b.index_of(0, Level::S0, Level::T1).unwrap();
        let p = populations(&DensityMatrix::pure_basis(&b, t), &b).unwrap();
        assert_eq!(p.p_acceptor_t1, 1.0);
        let d = presets::mechanism1();
        assert_eq!(stored_energy_density(&DensityMatrix::pure_basis(&b, t), &d, &b).unwrap(), 1.75);
    }

    #[test]
    fn energy_and_capacity_arithmetic() {
        let v = volumetric_energy_density(0.5, 1.75, 3.01e18).unwrap();
        assert!((v / 2.63e18 - 1.0).abs() < 5e-3);
        assert_eq!(volumetric_energy_density(0.0, 1.75, 3.01e18).unwrap(), 0.0);
        assert!((volumetric_energy_density(1.0, 1.75, 3.01e18).unwrap() - 5.2675e18).abs() < 1e4);
        let c = battery_capacity(1.75, 1.23e14 / 1.75).unwrap();
        assert!((c.ev_total - 1.23e14).abs() < 1.0);
        assert!((c.watt_hours / 5.47e-9 - 1.0).abs() < 1e-3);
        assert_eq!(battery_capacity(1.75, 0.0).unwrap().watt_hours, 0.0);
    }

    #[test]
    fn exponential_fits() {
        let s: Vec<(f64, f64)> = (0..20).map(|k| (k as f64 * 10.0, (-0.025 * k as f64 * 10.0).exp())).collect();
        let f = fit_exponential_decay(&s, (0.0, 1e9)).unwrap();
        assert!((f.rate - 0.025).abs() < 1e-6 && f.single_exponential);

        let c: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 3.0)).collect();
        assert_eq!(fit_exponential_decay(&c, (0.0, 10.0)).unwrap().rate, 0.0);

        let two: Vec<(f64, f64)> =
            (0..40).map(|k| (k as f64 * 0.1, 0.5 * (-(k as f64) * 0.1).exp() + 0.5 * (-(k as f64)).exp())).collect();
        assert!(!fit_exponential_decay(&two, (0.0, 4.0)).unwrap().single_exponential);

        assert!(matches!(fit_exponential_decay(&s[..4], (0.0, 1e9)), Err(Error::InsufficientData { .. })));
        let mut z = s.clone();
        z[3].1 = 0.0;
        assert!(matches!(fit_exponential_decay(&z, (0.0, 1e9)), Err(Error::Domain(_))));
    }

    #[test]
    fn trapezoid_cases() {
        let lin: Vec<(f64, f64)> = (0..=7).map(|k| (k as f64 / 7.0, k as f64 / 7.0)).collect();
        assert!((trapezoid_integral(&lin, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let one: Vec<(f64, f64)> = (0..=10).map(|k| (k as f64, 1.0)).collect();
        assert!((trapezoid_integral(&one, 0.0, 10.0).unwrap() - 10.0).abs() < 1e-14);
        let sq: Vec<(f64, f64)> = (0..=100).map(|k| (k as f64 / 100.0, (k as f64 / 100.0).powi(2))).collect();
        assert!((trapezoid_integral(&sq, 0.0, 1.0).unwrap() - 0.33335).abs() < 5e-5);
        assert!(trapezoid_integral(&sq, -0.1, 1.0).is_err());
        assert!(trapezoid_integral(&sq, 0.5, 0.5).is_err());
    }

    #[test]
    fn relative_reference_is_one() {
        let a = EmissionFeatures { delta_e: 0.2, fluorescence: 2.0, sharpness: 3.0, phosphorescence_rate: 4.0 };
        let b = EmissionFeatures { delta_e: 0.0, fluorescence: 1.0, sharpness: 6.0, phosphorescence_rate: 8.0 };
        let r = relative_features(&[a, b], 0).unwrap();
        assert_eq!(
            (r[0].rel_fluorescence_intensity, r[0].rel_sharpness, r[0].rel_phosphorescence_rate),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(r[1].rel_sharpness, 2.0);
    }
}
