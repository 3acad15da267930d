//! Spectral propagation of the Lindblad generator over stiff time spans.
//!
//! The generator is rewritten in the eigenbasis of H, so the commutator part
//! is diagonal. When H conserves the excitation number and every jump shifts
//! it uniformly, the superoperator splits into blocks labeled by the
//! excitation difference between ket and bra, and each block is diagonalized
//! separately. Slow eigenpairs are polished by Newton iteration, eigenvalues
//! at roundoff level are set to zero, and blocks whose eigenvector matrix is
//! ill-conditioned fall back to the matrix exponential.

use std::collections::BTreeMap;

use faer::Mat;

use super::expm::expm_apply;
use super::liouvillian::{superoperator, Liouvillian};
use crate::error::{Error, Result};
use crate::hilbert::{CompositeBasis, DensityMatrix};
use crate::linalg::{self, c64, CMat, ZERO};
use crate::model::HBAR_EV_NS;

/// Eigenpairs with |λ| ≤ SLOW_FRACTION·‖B‖_F are refined.
pub const SLOW_FRACTION: f64 = 1e-5;
/// Eigenvalues with |λ| ≤ ZERO_SNAP·ε·‖B‖_F are set to zero.
pub const ZERO_SNAP: f64 = 100.0;
/// Largest tolerated positive real part of an eigenvalue, eV.
pub const GROWTH_TOL: f64 = 1e-9;
/// Eigenvector condition number above which a block uses the matrix exponential.
pub const COND_LIMIT: f64 = 1e12;
/// Allowed trace drift of a propagated state.
pub const TRACE_DRIFT_TOL: f64 = 1e-9;

const NEWTON_STEPS: usize = 3;
const MAX_CORRECTION: f64 = 1e-3;

#[derive(Clone, Debug)]
struct Spectral {
    lambda: Vec<c64>,
    v: CMat,
    vinv: CMat,
}

#[derive(Clone, Debug)]
struct Block {
    sector: i64,
    indices: Vec<usize>,
    generator: CMat,
    lambda: Vec<c64>,
    vectors: CMat,
    cond: f64,
    spectral: Option<Spectral>,
}

#[derive(Clone, Debug)]
pub struct Propagator {
    basis: CompositeBasis,
    frame: CMat,
    frame_dag: CMat,
    graded: bool,
    blocks: Vec<Block>,
}

/// Summary of one generator block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockInfo {
    pub sector: i64,
    pub size: usize,
    pub condition: f64,
    pub spectral: bool,
    pub max_real_part: f64,
}

impl Propagator {
    pub fn new(l: &Liouvillian) -> Result<Self> {
        let basis = *l.basis();
        let d = basis.dim();
        let h = l.hamiltonian().matrix();
        let n: Vec<i64> = (0..d).map(|i| basis.excitations(i) as i64).collect();
        let graded = is_graded(h, l.jumps().iter().map(|j| j.operator.matrix()), &n);

        let (energies, u) = if graded { sector_eigh(h, &n)? } else { linalg::eigh(h)? };
        let ud = linalg::dagger(&u);
        let hd = Mat::from_fn(d, d, |i, j| if i == j { c64::new(energies[i], 0.0) } else { ZERO });
        let ops: Vec<(f64, CMat)> =
            l.jumps().iter().map(|j| (HBAR_EV_NS * j.rate, &ud * j.operator.matrix() * &u)).collect();
        let refs: Vec<(f64, &CMat)> = ops.iter().map(|(g, m)| (*g, m)).collect();
        let s = superoperator(&hd, &refs);

        let mut sectors: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for p in 0..d * d {
            let key = if graded { n[p % d] - n[p / d] } else { 0 };
            sectors.entry(key).or_default().push(p);
        }
        let blocks = sectors
            .into_iter()
            .map(|(sector, indices)| {
                let b = Mat::from_fn(indices.len(), indices.len(), |r, c| s[(indices[r], indices[c])]);
                decompose(sector, indices, b)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { basis, frame: u, frame_dag: ud, graded, blocks })
    }

    pub fn basis(&self) -> &CompositeBasis {
        &self.basis
    }

    pub fn is_graded(&self) -> bool {
        self.graded
    }

    pub fn blocks(&self) -> Vec<BlockInfo> {
        self.blocks
            .iter()
            .map(|b| BlockInfo {
                sector: b.sector,
                size: b.indices.len(),
                condition: b.cond,
                spectral: b.spectral.is_some(),
                max_real_part: b.lambda.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
            })
            .collect()
    }

    /// ρ(t) = exp(L t/ħ) ρ0 at each requested time (ns).
    pub fn evolve(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
        if rho0.n_max() != self.basis.n_max() {
            return Err(Error::DimensionMismatch { expected: self.basis.dim(), found: rho0.dim() });
        }
        check_times(times)?;
        let d = self.basis.dim();
        let x0 = linalg::vec_of(&(&self.frame_dag * rho0.matrix() * &self.frame));
        let tr0 = rho0.trace().re;

        struct Active<'a> {
            block: &'a Block,
            coeff: Vec<c64>,
        }
        let active: Vec<Active> = self
            .blocks
            .iter()
            .filter_map(|b| {
                let xb: Vec<c64> = b.indices.iter().map(|&p| x0[p]).collect();
                if xb.iter().all(|z| *z == ZERO) {
                    return None;
                }
                let coeff = match &b.spectral {
                    Some(sp) => linalg::matvec(&sp.vinv, &xb),
                    None => xb,
                };
                Some(Active { block: b, coeff })
            })
            .collect();

        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let tau = t / HBAR_EV_NS;
            let mut x = vec![ZERO; d * d];
            for a in &active {
                let y = match &a.block.spectral {
                    Some(sp) => {
                        let w: Vec<c64> = sp
                            .lambda
                            .iter()
                            .zip(&a.coeff)
                            .map(|(l, c)| if *l == ZERO { *c } else { (l * tau).exp() * c })
                            .collect();
                        linalg::matvec(&sp.v, &w)
                    }
                    None => expm_apply(&a.block.generator, tau, &a.coeff),
                };
                for (&p, yp) in a.block.indices.iter().zip(y) {
                    x[p] = yp;
                }
            }
            let rho = &self.frame * linalg::unvec(&x, d) * &self.frame_dag;
            let rho = DensityMatrix::new_unchecked(&self.basis, linalg::hermitize(&rho))?;
            let drift = (rho.trace().re - tr0).abs();
            if !(drift <= TRACE_DRIFT_TOL) {
                return Err(Error::NumericalFailure(format!(
                    "trace drifted by {drift:.3e} at t = {t} ns (blocks: {:?})",
                    self.blocks()
                )));
            }
            out.push(rho);
        }
        Ok(out)
    }

    /// Number of eigenvalues that are exactly zero after snapping.
    pub fn kernel_dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.lambda.iter().filter(|z| **z == ZERO).count()).sum()
    }

    /// Trace-one kernel vector of the generator.
    pub fn kernel_state(&self) -> Result<DensityMatrix> {
        let dim = self.kernel_dimension();
        if dim != 1 {
            return Err(Error::NonUniqueSteadyState { kernel_dim: dim });
        }
        let d = self.basis.dim();
        let mut x = vec![ZERO; d * d];
        for b in &self.blocks {
            if let Some(k) = b.lambda.iter().position(|z| *z == ZERO) {
                for (r, &p) in b.indices.iter().enumerate() {
                    x[p] = b.vectors[(r, k)];
                }
            }
        }
        let rho = &self.frame * linalg::unvec(&x, d) * &self.frame_dag;
        let tr = linalg::trace(&rho);
        if tr.norm() < 1e-300 {
            return Err(Error::NumericalFailure("kernel vector has zero trace".into()));
        }
        let rho = linalg::hermitize(&linalg::scale(&rho, tr.inv()));
        DensityMatrix::new_unchecked(&self.basis, rho)
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    for (k, &t) in times.iter().enumerate() {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidParameter(format!("time {t} must be finite and non-negative")));
        }
        if k > 0 && !(t > times[k - 1]) {
            return Err(Error::InvalidParameter("times must be strictly increasing".into()));
        }
    }
    Ok(())
}

fn is_graded<'a>(h: &CMat, jumps: impl Iterator<Item = &'a CMat>, n: &[i64]) -> bool {
    let d = n.len();
    for i in 0..d {
        for j in 0..d {
            if n[i] != n[j] && h[(i, j)] != ZERO {
                return false;
            }
        }
    }
    for l in jumps {
        let mut shift = None;
        for i in 0..d {
            for j in 0..d {
                if l[(i, j)] != ZERO {
                    let s = n[i] - n[j];
                    if *shift.get_or_insert(s) != s {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Hermitian eigendecomposition within each excitation sector, placed back
/// at the sector's own indices so every frame vector keeps a definite N.
fn sector_eigh(h: &CMat, n: &[i64]) -> Result<(Vec<f64>, CMat)> {
    let d = n.len();
    let mut energies = vec![0.0; d];
    let mut u = linalg::zeros(d, d);
    let mut sectors: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &k) in n.iter().enumerate() {
        sectors.entry(k).or_default().push(i);
    }
    for idx in sectors.values() {
        let sub = Mat::from_fn(idx.len(), idx.len(), |r, c| h[(idx[r], idx[c])]);
        let (w, v) = linalg::eigh(&sub)?;
        for c in 0..idx.len() {
            energies[idx[c]] = w[c];
            for r in 0..idx.len() {
                u[(idx[r], idx[c])] = v[(r, c)];
            }
        }
    }
    Ok((energies, u))
}

fn decompose(sector: i64, indices: Vec<usize>, b: CMat) -> Result<Block> {
    let fro = linalg::frobenius(&b);
    let (mut lambda, mut v) = linalg::eig(&b)?;

    let slow = SLOW_FRACTION * fro;
    for (k, l) in lambda.iter_mut().enumerate() {
        if l.norm() <= slow {
            refine(&b, l, &mut v, k);
        }
    }
    let snap = ZERO_SNAP * f64::EPSILON * fro;
    for z in lambda.iter_mut() {
        if z.norm() <= snap {
            *z = ZERO;
        } else if z.re > 0.0 {
            if z.re > GROWTH_TOL {
                return Err(Error::NumericalFailure(format!(
                    "generator block {sector} has a growing mode with rate {:.3e} eV",
                    z.re
                )));
            }
            z.re = 0.0;
        }
    }

    let vinv = linalg::inverse(&v);
    let cond = linalg::norm1(&v) * linalg::norm1(&vinv);
    let spectral = if cond.is_finite() && cond <= COND_LIMIT {
        Some(Spectral { lambda: lambda.clone(), v: v.clone(), vinv })
    } else {
        log::warn!("generator block {sector} has eigenvector condition {cond:.3e}; using the matrix exponential");
        None
    };
    Ok(Block { sector, indices, generator: b, lambda, vectors: v, cond, spectral })
}

/// Newton iteration on the bordered system [[B − λ, −x], [xᴴ, 0]] [dx; dλ] = [−r; 0].
fn refine(b: &CMat, lambda: &mut c64, v: &mut CMat, k: usize) {
    let n = b.nrows();
    let mut x: Vec<c64> = (0..n).map(|i| v[(i, k)]).collect();
    let mut lam = *lambda;
    let residual = |x: &[c64], lam: c64| -> (Vec<c64>, f64) {
        let bx = linalg::matvec(b, x);
        let r: Vec<c64> = bx.iter().zip(x).map(|(y, xi)| y - lam * xi).collect();
        let nr = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (r, nr)
    };
    let (mut r, mut rn) = residual(&x, lam);
    for _ in 0..NEWTON_STEPS {
        if rn == 0.0 {
            break;
        }
        let m = Mat::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
            (true, true) => {
                if i == j {
                    b[(i, j)] - lam
                } else {
                    b[(i, j)]
                }
            }
            (true, false) => -x[i],
            (false, true) => x[j].conj(),
            (false, false) => ZERO,
        });
        let rhs = Mat::from_fn(n + 1, 1, |i, _| if i < n { -r[i] } else { ZERO });
        let sol = linalg::solve(&m, &rhs);
        let dx_norm = (0..n).map(|i| sol[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        if !dx_norm.is_finite() || dx_norm > MAX_CORRECTION || !sol[(n, 0)].norm().is_finite() {
            break;
        }
        let mut nx: Vec<c64> = (0..n).map(|i| x[i] + sol[(i, 0)]).collect();
        let nn = nx.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        nx.iter_mut().for_each(|z| *z /= nn);
        let nl = lam + sol[(n, 0)];
        let (nr, nrn) = residual(&nx, nl);
        if !(nrn < rn) {
            break;
        }
        x = nx;
        lam = nl;
        r = nr;
        rn = nrn;
    }
    *lambda = lam;
    for i in 0..n {
        v[(i, k)] = x[i];
    }
}
