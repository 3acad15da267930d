//! Single-excitation eigenanalysis: branch energies and characters, detuning,
//! resonance search and the hybrid-triplet effective lifetime.

use std::fmt;
use std::str::FromStr;

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, RMat};
use crate::model::{cavity_energy, DeviceParams, RateParams, HBAR_EV_NS};

/// Eigenvalues closer than this are treated as degenerate for labeling.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BranchLabel {
    UP,
    MP,
    LP,
    TTilde,
}

impl BranchLabel {
    pub const ALL: [BranchLabel; 4] = [BranchLabel::UP, BranchLabel::MP, BranchLabel::LP, BranchLabel::TTilde];

    pub fn as_str(self) -> &'static str {
        match self {
            BranchLabel::UP => "UP",
            BranchLabel::MP => "MP",
            BranchLabel::LP => "LP",
            BranchLabel::TTilde => "TT",
        }
    }
}

impl fmt::Display for BranchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BranchLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "UP" => Ok(BranchLabel::UP),
            "MP" => Ok(BranchLabel::MP),
            "LP" => Ok(BranchLabel::LP),
            "TT" | "T~" | "Ttilde" => Ok(BranchLabel::TTilde),
            other => Err(Error::InvalidParameter(format!("unknown branch tag {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolaritonBranch {
    pub energy: f64,
    /// Weights on (cavity, donor S1, acceptor S1, acceptor T1).
    pub character: [f64; 4],
    pub label: BranchLabel,
}

/// Basis (|1,S0,S0⟩, |0,S1,S0⟩, |0,S0,S1⟩, |0,S0,T1⟩).
pub fn single_excitation_hamiltonian(device: &DeviceParams, theta_deg: f64) -> Result<RMat> {
    device.validate()?;
    let wc = cavity_energy(device.omega_c0, device.n_eff, theta_deg)?;
    let d = device;
    let m = [
        [wc, d.j_d, d.j_a, d.j_t],
        [d.j_d, d.omega_d, 0.0, 0.0],
        [d.j_a, 0.0, d.omega_a, 0.0],
        [d.j_t, 0.0, 0.0, d.omega_t],
    ];
    Ok(Mat::from_fn(4, 4, |i, j| m[i][j]))
}

/// Branches ordered UP, MP, LP, T̃.
pub fn polariton_branches(device: &DeviceParams, theta_deg: f64) -> Result<[PolaritonBranch; 4]> {
    analyze(device, theta_deg).map(|a| a.0)
}

/// Branches plus the eigenvector column of each branch.
fn analyze(device: &DeviceParams, theta_deg: f64) -> Result<([PolaritonBranch; 4], [usize; 4], RMat)> {
    let h = single_excitation_hamiltonian(device, theta_deg)?;
    let (w, v) = linalg::eigh_real(&h)?;
    for k in 1..4 {
        if (w[k] - w[k - 1]).abs() < DEGENERACY_TOL {
            return Err(Error::AmbiguousLabeling(w[k - 1], w[k]));
        }
    }
    let character = |k: usize| -> [f64; 4] {
        let mut c = [0.0; 4];
        let mut s = 0.0;
        for (i, ci) in c.iter_mut().enumerate() {
            *ci = v[(i, k)] * v[(i, k)];
            s += *ci;
        }
        c.map(|x| x / s)
    };
    let chars: Vec<[f64; 4]> = (0..4).map(character).collect();
    let t = (0..4).max_by(|&a, &b| chars[a][3].total_cmp(&chars[b][3])).unwrap();
    let rest: Vec<usize> = (0..4).filter(|&k| k != t).collect();
    let mk = |k: usize, label| PolaritonBranch { energy: w[k], character: chars[k], label };
    let cols = [rest[2], rest[1], rest[0], t];
    let branches = [
        mk(cols[0], BranchLabel::UP),
        mk(cols[1], BranchLabel::MP),
        mk(cols[2], BranchLabel::LP),
        mk(cols[3], BranchLabel::TTilde),
    ];
    Ok((branches, cols, v))
}

pub fn branch(branches: &[PolaritonBranch; 4], label: BranchLabel) -> &PolaritonBranch {
    match label {
        BranchLabel::UP => &branches[0],
        BranchLabel::MP => &branches[1],
        BranchLabel::LP => &branches[2],
        BranchLabel::TTilde => &branches[3],
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetuningReport {
    pub e_lp: f64,
    pub e_t1: f64,
    pub delta_e: f64,
}

/// ΔE = E_LP − ω_T, with the LP taken from the J_T = 0 spectrum.
pub fn detuning(device: &DeviceParams, theta_deg: f64) -> Result<DetuningReport> {
    let b = polariton_branches(&device.with_j_t(0.0), theta_deg)?;
    let e_lp = branch(&b, BranchLabel::LP).energy;
    Ok(DetuningReport { e_lp, e_t1: device.omega_t, delta_e: e_lp - device.omega_t })
}

/// τ̃ = p_T τ_T + p_P τ_P.
pub fn effective_triplet_lifetime(p_t: f64, tau_t: f64, p_p: f64, tau_p: f64) -> Result<f64> {
    if !(p_t >= 0.0 && p_p >= 0.0) || p_t + p_p > 1.0 + 1e-9 {
        return Err(Error::Domain(format!("populations p_t={p_t}, p_p={p_p} must be non-negative with sum at most 1")));
    }
    if !(tau_t > 0.0 && tau_p > 0.0) {
        return Err(Error::Domain(format!("lifetimes must be positive, got {tau_t} and {tau_p}")));
    }
    Ok(p_t * tau_t + p_p * tau_p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceTarget {
    pub label: BranchLabel,
    pub energy: f64,
}

pub const RESONANCE_TOL: f64 = 1e-6;

/// ω_0 minimizing |E_label(ω_0) − target| over `[lo, hi]`: grid scan, then
/// bisection on a sign change or golden-section search on the distance.
pub fn find_resonance(
    template: &DeviceParams,
    range: (f64, f64),
    steps: usize,
    target: ResonanceTarget,
) -> Result<f64> {
    let (lo, hi) = range;
    if !(hi > lo) || steps < 3 {
        return Err(Error::InvalidParameter(format!("need hi > lo and at least 3 steps, got [{lo}, {hi}] x {steps}")));
    }
    let f = |w: f64| -> Result<f64> {
        let b = polariton_branches(&template.with_omega_c0(w), 0.0)?;
        Ok(branch(&b, target.label).energy - target.energy)
    };
    let grid: Vec<f64> = (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect();
    let vals = grid.iter().map(|&w| f(w)).collect::<Result<Vec<_>>>()?;

    let mut best_bracket: Option<(usize, f64)> = None;
    for k in 0..steps - 1 {
        if vals[k] == 0.0 {
            return Ok(grid[k]);
        }
        if vals[k].signum() != vals[k + 1].signum() {
            let score = vals[k].abs().min(vals[k + 1].abs());
            if best_bracket.is_none_or(|(_, s)| score < s) {
                best_bracket = Some((k, score));
            }
        }
    }
    if let Some((k, _)) = best_bracket {
        let (mut a, mut b) = (grid[k], grid[k + 1]);
        let mut fa = vals[k];
        while b - a > RESONANCE_TOL * 1e-3 {
            let m = 0.5 * (a + b);
            let fm = f(m)?;
            if fm == 0.0 {
                return Ok(m);
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        return Ok(0.5 * (a + b));
    }

    let k = (0..steps).min_by(|&i, &j| vals[i].abs().total_cmp(&vals[j].abs())).unwrap();
    if k == 0 || k == steps - 1 {
        return Err(Error::ResonanceNotBracketed(format!(
            "closest approach {:.3e} eV at range edge {}",
            vals[k].abs(),
            grid[k]
        )));
    }
    let g = |w: f64| f(w).map(f64::abs);
    let (mut a, mut b) = (grid[k - 1], grid[k + 1]);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    while b - a > RESONANCE_TOL * 1e-3 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampedBranch {
    pub label: BranchLabel,
    pub energy: f64,
    /// Full width at half maximum, eV.
    pub fwhm: f64,
}

/// Complex energies of H_eff = H₁ − (i/2) diag(ħγ_C, ħγ_D, ħ(γ_A+γ_ISC), ħγ_IC),
/// labeled by maximal overlap with the Hermitian branches.
pub fn damped_branches(device: &DeviceParams, rates: &RateParams, theta_deg: f64) -> Result<[DampedBranch; 4]> {
    rates.validate()?;
    let (herm, cols, u) = analyze(device, theta_deg)?;
    let h1 = single_excitation_hamiltonian(device, theta_deg)?;
    let widths =
        [rates.gamma_c, rates.gamma_d, rates.gamma_a + rates.gamma_isc, rates.gamma_ic].map(|g| HBAR_EV_NS * g);
    let heff = Mat::from_fn(4, 4, |i, j| {
        let mut z = c64::new(h1[(i, j)], 0.0);
        if i == j {
            z.im -= 0.5 * widths[i];
        }
        z
    });
    let (w, v) = linalg::eig(&heff)?;

    let mut out = [DampedBranch { label: BranchLabel::UP, energy: 0.0, fwhm: 0.0 }; 4];
    let mut used = [false; 4];
    for (slot, b) in herm.iter().enumerate() {
        let k = (0..4)
            .filter(|&k| !used[k])
            .max_by(|&x, &y| overlap(&u, cols[slot], &v, x).total_cmp(&overlap(&u, cols[slot], &v, y)))
            .unwrap();
        used[k] = true;
        out[slot] = DampedBranch { label: b.label, energy: w[k].re, fwhm: -2.0 * w[k].im };
    }
    Ok(out)
}

fn overlap(u: &RMat, col: usize, v: &linalg::CMat, k: usize) -> f64 {
    let mut s = c64::new(0.0, 0.0);
    let mut n = 0.0;
    for i in 0..4 {
        s += v[(i, k)] * u[(i, col)];
        n += v[(i, k)].norm_sqr();
    }
    s.norm_sqr() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn block_layout() {
        let d = presets::mechanism2();
        let h = single_excitation_hamiltonian(&d, 0.0).unwrap();
        assert_eq!(h[(0, 3)], d.j_t);
        assert_eq!(h[(3, 0)], d.j_t);
        assert_eq!(h[(1, 2)], 0.0);
        assert_eq!(h[(3, 3)], 1.75);
    }

    #[test]
    fn resonant_pair_is_half_and_half() {
        let d = DeviceParams {
            omega_c0: 2.0,
            n_eff: 1.5,
            omega_d: 2.0,
            omega_a: 2.5,
            omega_t: 1.0,
            j_d: 0.1,
            j_a: 0.0,
            j_t: 0.0,
        };
        let b = polariton_branches(&d, 0.0).unwrap();
        let up = branch(&b, BranchLabel::UP);
        assert!((up.energy - 2.5).abs() < 1e-12 && (up.character[2] - 1.0).abs() < 1e-12);
        let mp = branch(&b, BranchLabel::MP);
        assert!((mp.energy - 2.1).abs() < 1e-12);
        assert!((mp.character[0] - 0.5).abs() < 1e-12 && (mp.character[1] - 0.5).abs() < 1e-12);
        let lp = branch(&b, BranchLabel::LP);
        assert!((lp.energy - 1.9).abs() < 1e-12);
        assert!((lp.character[0] - 0.5).abs() < 1e-12);
        assert_eq!(branch(&b, BranchLabel::TTilde).character, [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn cavity4_acceptor_middle_branch() {
        let b = polariton_branches(&presets::cavity(4).unwrap(), 0.0).unwrap();
        assert!(branch(&b, BranchLabel::MP).character[2] > 0.85);
        assert!((branch(&b, BranchLabel::LP).energy - 1.761).abs() < 1e-3);
    }

    #[test]
    fn diagonal_limit() {
        let d = presets::mechanism1().uncoupled();
        let b = polariton_branches(&d, 0.0).unwrap();
        let mut e: Vec<f64> = b.iter().map(|x| x.energy).collect();
        e.sort_by(f64::total_cmp);
        for (x, y) in e.iter().zip([1.75, 2.217, 2.34, 2.55]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn lifetime_formula() {
        assert_eq!(effective_triplet_lifetime(1.0, 40.0, 0.0, 1.0).unwrap(), 40.0);
        assert!((effective_triplet_lifetime(0.5, 40.0, 0.5, 1e-6).unwrap() - 20.0).abs() < 1e-5);
        assert_eq!(effective_triplet_lifetime(0.0, 40.0, 1.0, 0.001).unwrap(), 0.001);
        assert!(effective_triplet_lifetime(-0.1, 40.0, 0.5, 1.0).is_err());
        assert!(effective_triplet_lifetime(0.7, 40.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn resonance_on_bare_cavity() {
        let d = presets::mechanism2().uncoupled();
        let w = find_resonance(&d, (1.5, 2.1), 31, ResonanceTarget { label: BranchLabel::LP, energy: 1.8 }).unwrap();
        assert!((w - 1.8).abs() < RESONANCE_TOL);
    }

    #[test]
    fn unbracketed_resonance() {
        let d = presets::mechanism2().with_j_t(0.0);
        let r = find_resonance(&d, (1.9, 2.1), 11, ResonanceTarget { label: BranchLabel::LP, energy: 1.75 });
        assert!(matches!(r, Err(Error::ResonanceNotBracketed(_))));
    }

    #[test]
    fn damped_widths_without_coupling() {
        let d = presets::mechanism2().uncoupled();
        let r = presets::rates_default();
        let b = damped_branches(&d, &r, 0.0).unwrap();
        let lp = b.iter().find(|x| x.label == BranchLabel::LP).unwrap();
        assert!((lp.fwhm - HBAR_EV_NS * 50.0).abs() < 1e-15);
        let tt = b.iter().find(|x| x.label == BranchLabel::TTilde).unwrap();
        assert!((tt.fwhm - HBAR_EV_NS * 1e-4).abs() < 1e-18);
    }
}
