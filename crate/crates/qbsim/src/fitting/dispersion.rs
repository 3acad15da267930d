//! Three-coupled-oscillator fit of angle-resolved branch energies.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::DeviceParams;
use crate::par::{self, Execution};
use crate::polaritons::{single_excitation_hamiltonian, BranchLabel};

use super::{minimize, stderr_proxy, FitParam, FitResult, MinimizeOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionRecord {
    pub theta_deg: f64,
    /// UP, MP or LP; `None` for untagged energies.
    pub branch: Option<BranchLabel>,
    pub energy: f64,
    pub weight: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DispersionData {
    pub records: Vec<DispersionRecord>,
}

impl DispersionData {
    pub fn new(records: Vec<DispersionRecord>) -> Result<Self> {
        let d = Self { records };
        d.validate()?;
        Ok(d)
    }

    pub fn angles(&self) -> Vec<f64> {
        let set: BTreeSet<u64> = self.records.iter().map(|r| r.theta_deg.to_bits()).collect();
        let mut v: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn validate(&self) -> Result<()> {
        for r in &self.records {
            if !(r.energy > 0.0 && r.energy.is_finite()) {
                return Err(Error::Domain(format!("branch energy {} eV must be positive", r.energy)));
            }
            if !r.theta_deg.is_finite() {
                return Err(Error::Domain(format!("angle {} is not finite", r.theta_deg)));
            }
            if r.branch == Some(BranchLabel::TTilde) {
                return Err(Error::InvalidParameter("dispersion data carries only UP/MP/LP tags".into()));
            }
            if let Some(w) = r.weight {
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::Domain(format!("weight {w} must be non-negative")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DispersionParam {
    OmegaC0,
    NEff,
    JD,
    JA,
    OmegaD,
    OmegaA,
}

impl DispersionParam {
    pub const DEFAULT_FREE: [DispersionParam; 3] = [DispersionParam::OmegaC0, DispersionParam::JD, DispersionParam::JA];

    pub fn name(self) -> &'static str {
        match self {
            DispersionParam::OmegaC0 => "omega_c0",
            DispersionParam::NEff => "n_eff",
            DispersionParam::JD => "j_d",
            DispersionParam::JA => "j_a",
            DispersionParam::OmegaD => "omega_d",
            DispersionParam::OmegaA => "omega_a",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        [Self::OmegaC0, Self::NEff, Self::JD, Self::JA, Self::OmegaD, Self::OmegaA]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown dispersion parameter {s:?}")))
    }

    fn is_exciton_energy(self) -> bool {
        matches!(self, DispersionParam::OmegaD | DispersionParam::OmegaA)
    }

    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            DispersionParam::OmegaC0 | DispersionParam::OmegaD | DispersionParam::OmegaA => (0.5, 4.0),
            DispersionParam::NEff => (1.0, 4.0),
            DispersionParam::JD | DispersionParam::JA => (0.0, 1.0),
        }
    }

    fn get(self, d: &DeviceParams) -> f64 {
        match self {
            DispersionParam::OmegaC0 => d.omega_c0,
            DispersionParam::NEff => d.n_eff,
            DispersionParam::JD => d.j_d,
            DispersionParam::JA => d.j_a,
            DispersionParam::OmegaD => d.omega_d,
            DispersionParam::OmegaA => d.omega_a,
        }
    }

    fn set(self, d: &mut DeviceParams, v: f64) {
        match self {
            DispersionParam::OmegaC0 => d.omega_c0 = v,
            DispersionParam::NEff => d.n_eff = v,
            DispersionParam::JD => d.j_d = v,
            DispersionParam::JA => d.j_a = v,
            DispersionParam::OmegaD => d.omega_d = v,
            DispersionParam::OmegaA => d.omega_a = v,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct DispersionFitOptions {
    /// Allows ω_D and ω_A among the free parameters.
    pub free_exciton_energies: bool,
    /// Per-parameter bounds overriding the defaults.
    pub bounds: Vec<(DispersionParam, (f64, f64))>,
    pub minimize: MinimizeOptions,
}

#[derive(Clone, Debug)]
pub struct DispersionFit {
    pub result: FitResult,
    pub device: DeviceParams,
}

/// (UP, MP, LP) energies of the J_T = 0 block.
pub fn dispersion_model(device: &DeviceParams, theta_deg: f64) -> Result<[f64; 3]> {
    let h = single_excitation_hamiltonian(&device.with_j_t(0.0), theta_deg)?;
    let block = h.as_ref().submatrix(0, 0, 3, 3).to_owned();
    let (w, _) = linalg::eigh_real(&block)?;
    Ok([w[2], w[1], w[0]])
}

fn slot(label: BranchLabel) -> usize {
    match label {
        BranchLabel::UP => 0,
        BranchLabel::MP => 1,
        _ => 2,
    }
}

/// Record indices grouped by angle, with the model slot of each record.
/// Untagged energies take the nearest free model branch, highest first.
fn assignments(data: &DispersionData, device: &DeviceParams) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::with_capacity(data.records.len());
    for theta in data.angles() {
        let idx: Vec<usize> = (0..data.records.len()).filter(|&i| data.records[i].theta_deg == theta).collect();
        let mut used = [false; 3];
        for &i in &idx {
            if let Some(b) = data.records[i].branch {
                used[slot(b)] = true;
                out.push((i, slot(b)));
            }
        }
        let mut untagged: Vec<usize> = idx.into_iter().filter(|&i| data.records[i].branch.is_none()).collect();
        if untagged.is_empty() {
            continue;
        }
        let model = dispersion_model(device, theta)?;
        untagged.sort_by(|&a, &b| data.records[b].energy.total_cmp(&data.records[a].energy));
        for i in untagged {
            let e = data.records[i].energy;
            let k = (0..3)
                .filter(|&k| !used[k])
                .min_by(|&a, &b| (model[a] - e).abs().total_cmp(&(model[b] - e).abs()))
                .ok_or_else(|| Error::InvalidParameter(format!("more than three energies at θ = {theta}°")))?;
            used[k] = true;
            out.push((i, k));
        }
    }
    Ok(out)
}

fn residuals(data: &DispersionData, assign: &[(usize, usize)], device: &DeviceParams) -> Result<Vec<f64>> {
    let mut cache: Vec<(f64, [f64; 3])> = Vec::new();
    let mut out = Vec::with_capacity(assign.len());
    for &(i, k) in assign {
        let r = &data.records[i];
        let model = match cache.iter().find(|(t, _)| *t == r.theta_deg) {
            Some((_, m)) => *m,
            None => {
                let m = dispersion_model(device, r.theta_deg)?;
                cache.push((r.theta_deg, m));
                m
            }
        };
        out.push(r.weight.unwrap_or(1.0).sqrt() * (model[k] - r.energy));
    }
    Ok(out)
}

pub fn fit_coupled_oscillator(
    data: &DispersionData,
    init: &DeviceParams,
    free: &[DispersionParam],
) -> Result<DispersionFit> {
    fit_coupled_oscillator_with(data, init, free, &DispersionFitOptions::default())
}

pub fn fit_coupled_oscillator_with(
    data: &DispersionData,
    init: &DeviceParams,
    free: &[DispersionParam],
    opts: &DispersionFitOptions,
) -> Result<DispersionFit> {
    data.validate()?;
    init.validate()?;
    if free.is_empty() {
        return Err(Error::InvalidParameter("no free parameters".into()));
    }
    if let Some(p) = free.iter().find(|p| p.is_exciton_energy() && !opts.free_exciton_energies) {
        return Err(Error::InvalidParameter(format!(
            "{} is frozen unless exciton energies are explicitly freed",
            p.name()
        )));
    }
    let angles = data.angles().len();
    if angles < 3 || data.records.len() < free.len() {
        return Err(Error::Underdetermined {
            points: if angles < 3 { angles } else { data.records.len() },
            params: free.len(),
        });
    }

    let mut warnings = Vec::new();
    let assign = assignments(data, init)?;
    if data.records.iter().any(|r| r.branch.is_none()) {
        let msg = "untagged energies were matched to branches by nearest energy at the initial guess".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let bounds: Vec<(f64, f64)> = free
        .iter()
        .map(|p| opts.bounds.iter().find(|(q, _)| q == p).map(|(_, b)| *b).unwrap_or_else(|| p.default_bounds()))
        .collect();
    let device_at = |x: &[f64]| {
        let mut d = *init;
        for (p, &v) in free.iter().zip(x) {
            p.set(&mut d, v);
        }
        d
    };
    let res_at = |x: &[f64]| residuals(data, &assign, &device_at(x)).ok();
    let x0: Vec<f64> = free.iter().zip(&bounds).map(|(p, &(lo, hi))| p.get(init).clamp(lo, hi)).collect();

    let objective = |x: &[f64]| res_at(x).map_or(f64::NAN, |r| r.iter().map(|v| v * v).sum());
    let mut result = minimize(objective, &x0, &bounds, &opts.minimize)?;
    let x = result.values();
    let se = stderr_proxy(res_at, &x, &bounds);
    result.params = free
        .iter()
        .zip(x.iter().zip(se))
        .map(|(p, (&v, s))| FitParam { name: p.name().to_string(), value: v, stderr_proxy: s })
        .collect();
    if !result.converged {
        warnings.push(format!("simplex did not converge in {} iterations", result.iterations));
    }
    result.warnings = warnings;
    Ok(DispersionFit { device: device_at(&x), result })
}

/// Tagged UP/MP/LP energies at each angle, optionally with N(0, σ²) noise.
pub fn synthesize_dispersion(device: &DeviceParams, angles: &[f64], sigma: f64, seed: u64) -> Result<DispersionData> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise σ = {sigma} must be non-negative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut records = Vec::with_capacity(3 * angles.len());
    for &theta in angles {
        let e = dispersion_model(device, theta)?;
        for (label, energy) in [BranchLabel::UP, BranchLabel::MP, BranchLabel::LP].into_iter().zip(e) {
            let noise = if sigma > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            records.push(DispersionRecord {
                theta_deg: theta,
                branch: Some(label),
                energy: energy + noise,
                weight: None,
            });
        }
    }
    DispersionData::new(records)
}

/// One noisy synthesis and fit per seed; results are in seed order.
pub fn fit_noise_ensemble(
    truth: &DeviceParams,
    angles: &[f64],
    sigma: f64,
    seeds: &[u64],
    init: &DeviceParams,
    free: &[DispersionParam],
    exec: Execution,
) -> Result<Vec<DispersionFit>> {
    par::try_map(exec, seeds, |&s| {
        let data = synthesize_dispersion(truth, angles, sigma, s)?;
        fit_coupled_oscillator(&data, init, free)
    })
}
