use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::hilbert::{photon_annihilation, transition, CompositeBasis, Level, OperatorMatrix, Site};
use crate::linalg::{self, c64, CMat};
use crate::model::{RateParams, HBAR_EV_NS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Pump,
    CavityLoss,
    DonorLoss,
    AcceptorLoss,
    InternalConversion,
    IntersystemCrossing,
}

impl Channel {
    pub fn label(self) -> &'static str {
        match self {
            Channel::Pump => "pump",
            Channel::CavityLoss => "cavity_loss",
            Channel::DonorLoss => "donor_loss",
            Channel::AcceptorLoss => "acceptor_loss",
            Channel::InternalConversion => "internal_conversion",
            Channel::IntersystemCrossing => "intersystem_crossing",
        }
    }

    fn rate(self, r: &RateParams) -> f64 {
        match self {
            Channel::Pump => r.gamma_p,
            Channel::CavityLoss => r.gamma_c,
            Channel::DonorLoss => r.gamma_d,
            Channel::AcceptorLoss => r.gamma_a,
            Channel::InternalConversion => r.gamma_ic,
            Channel::IntersystemCrossing => r.gamma_isc,
        }
    }

    /// Bare jump operator L_k.
    pub fn operator(self, basis: &CompositeBasis) -> Result<OperatorMatrix> {
        match self {
            Channel::Pump => Ok(photon_annihilation(basis).dagger()),
            Channel::CavityLoss => Ok(photon_annihilation(basis)),
            Channel::DonorLoss => transition(basis, Site::Donor, Level::S1, Level::S0),
            Channel::AcceptorLoss => transition(basis, Site::Acceptor, Level::S1, Level::S0),
            Channel::InternalConversion => transition(basis, Site::Acceptor, Level::T1, Level::S0),
            Channel::IntersystemCrossing => transition(basis, Site::Acceptor, Level::S1, Level::T1),
        }
    }

    pub const ALL: [Channel; 6] = [
        Channel::Pump,
        Channel::CavityLoss,
        Channel::DonorLoss,
        Channel::AcceptorLoss,
        Channel::InternalConversion,
        Channel::IntersystemCrossing,
    ];
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug)]
pub struct Jump {
    pub channel: Channel,
    /// Rate in GHz.
    pub rate: f64,
    pub operator: OperatorMatrix,
}

/// Lindblad generator in eV acting on column-stacked density matrices;
/// `dρ/dt = (1/ħ) L vec(ρ)` with t in ns.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    basis: CompositeBasis,
    matrix: CMat,
    hamiltonian: OperatorMatrix,
    jumps: Vec<Jump>,
    rates: RateParams,
}

impl Liouvillian {
    pub fn basis(&self) -> &CompositeBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn rates(&self) -> &RateParams {
        &self.rates
    }

    pub fn channel_list(&self) -> Vec<(&'static str, f64)> {
        self.jumps.iter().map(|j| (j.channel.label(), j.rate)).collect()
    }

    /// Apply to a density matrix, returning ħ dρ/dt in eV.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let d = self.dim();
        linalg::unvec(&linalg::matvec(&self.matrix, &linalg::vec_of(rho)), d)
    }

    /// Largest entry of vec(1)ᵀ L.
    pub fn trace_annihilation_error(&self) -> f64 {
        let d = self.dim();
        let n = d * d;
        let mut worst = 0.0f64;
        for q in 0..n {
            let mut s = c64::new(0.0, 0.0);
            for i in 0..d {
                s += self.matrix[(i + i * d, q)];
            }
            worst = worst.max(s.norm());
        }
        worst
    }

    /// Row-major dump with one `re,im` pair per entry.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.matrix.nrows();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.matrix[(i, j)];
                    format!("{:e},{:e}", z.re, z.im)
                })
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// −i(1⊗H − Hᵀ⊗1) + Σ g_k (L̄_k⊗L_k − ½ 1⊗L_k†L_k − ½ (L_k†L_k)ᵀ⊗1), with `g_k` in eV.
pub fn superoperator(h: &CMat, jumps: &[(f64, &CMat)]) -> CMat {
    let d = h.nrows();
    let id = linalg::identity(d);
    let mi = c64::new(0.0, -1.0);
    let mut s = linalg::scale(&(linalg::kron(&id, h) - linalg::kron(&linalg::transpose(h), &id)), mi);
    for &(g, l) in jumps {
        if g == 0.0 {
            continue;
        }
        let ldl = linalg::dagger(l) * l;
        let term = linalg::kron(&linalg::conj(l), l)
            - linalg::scale(&linalg::kron(&id, &ldl), c64::new(0.5, 0.0))
            - linalg::scale(&linalg::kron(&linalg::transpose(&ldl), &id), c64::new(0.5, 0.0));
        s += linalg::scale(&term, c64::new(g, 0.0));
    }
    s
}

pub fn build_liouvillian(h: &OperatorMatrix, rates: &RateParams, basis: &CompositeBasis) -> Result<Liouvillian> {
    basis.check(h)?;
    rates.validate()?;
    let herm = h.hermiticity_error();
    if herm > 1e-12 * h.max_abs().max(1.0) {
        return Err(Error::InvalidParameter(format!("Hamiltonian is not Hermitian (asymmetry {herm:.3e})")));
    }
    let mut jumps = Vec::new();
    for ch in Channel::ALL {
        let rate = ch.rate(rates);
        if rate > 0.0 {
            jumps.push(Jump { channel: ch, rate, operator: ch.operator(basis)? });
        }
    }
    let terms: Vec<(f64, &CMat)> = jumps.iter().map(|j| (HBAR_EV_NS * j.rate, j.operator.matrix())).collect();
    let matrix = superoperator(h.matrix(), &terms);
    Ok(Liouvillian { basis: *basis, matrix, hamiltonian: h.clone(), jumps, rates: *rates })
}
