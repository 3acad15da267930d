//! Truncated composite space |n, d, a⟩ of one cavity mode, a two-level donor
//! and a three-level acceptor.

use std::fmt;

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    Donor,
    Acceptor,
}

impl Site {
    fn name(self) -> &'static str {
        match self {
            Site::Donor => "donor",
            Site::Acceptor => "acceptor",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    S0,
    S1,
    T1,
}

impl Level {
    fn name(self) -> &'static str {
        match self {
            Level::S0 => "S0",
            Level::S1 => "S1",
            Level::T1 => "T1",
        }
    }

    /// Position of the level in the site's label list.
    pub fn index_on(self, site: Site) -> Result<usize> {
        match (site, self) {
            (Site::Donor, Level::S0) => Ok(0),
            (Site::Donor, Level::S1) => Ok(1),
            (Site::Acceptor, Level::S0) => Ok(0),
            (Site::Acceptor, Level::T1) => Ok(1),
            (Site::Acceptor, Level::S1) => Ok(2),
            (Site::Donor, Level::T1) => Err(Error::InvalidLevel { site: site.name(), level: self.name() }),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DONOR_LEVELS: [Level; 2] = [Level::S0, Level::S1];
pub const ACCEPTOR_LEVELS: [Level; 3] = [Level::S0, Level::T1, Level::S1];

/// Product basis ordered as `index = n·6 + d·3 + a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CompositeBasis {
    n_max: usize,
}

pub fn build_basis(n_max: usize) -> Result<CompositeBasis> {
    CompositeBasis::new(n_max)
}

impl CompositeBasis {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidCutoff(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1) * 6
    }

    pub fn index(&self, n: usize, d: usize, a: usize) -> usize {
        debug_assert!(n <= self.n_max && d < 2 && a < 3);
        n * 6 + d * 3 + a
    }

    pub fn index_of(&self, n: usize, donor: Level, acceptor: Level) -> Result<usize> {
        if n > self.n_max {
            return Err(Error::InvalidParameter(format!("photon number {n} exceeds cutoff {}", self.n_max)));
        }
        Ok(self.index(n, donor.index_on(Site::Donor)?, acceptor.index_on(Site::Acceptor)?))
    }

    pub fn unindex(&self, i: usize) -> (usize, usize, usize) {
        (i / 6, (i % 6) / 3, i % 3)
    }

    pub fn ground_index(&self) -> usize {
        0
    }

    /// Excitation number of a basis state: photons plus excited molecular levels.
    pub fn excitations(&self, i: usize) -> usize {
        let (n, d, a) = self.unindex(i);
        n + d + usize::from(a != 0)
    }

    pub fn check(&self, op: &OperatorMatrix) -> Result<()> {
        if op.n_max != self.n_max {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        Ok(())
    }
}

/// Dense operator tied to the cutoff it was built at.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    n_max: usize,
    data: CMat,
}

impl OperatorMatrix {
    pub fn new(basis: &CompositeBasis, data: CMat) -> Result<Self> {
        if data.nrows() != basis.dim() || data.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: data.nrows() });
        }
        Ok(Self { n_max: basis.n_max, data })
    }

    pub fn zeros(basis: &CompositeBasis) -> Self {
        Self { n_max: basis.n_max, data: linalg::zeros(basis.dim(), basis.dim()) }
    }

    pub fn identity(basis: &CompositeBasis) -> Self {
        Self { n_max: basis.n_max, data: linalg::identity(basis.dim()) }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn into_matrix(self) -> CMat {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.data[(i, j)]
    }

    pub fn dagger(&self) -> Self {
        Self { n_max: self.n_max, data: linalg::dagger(&self.data) }
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.n_max != other.n_max {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self { n_max: self.n_max, data: &self.data * &other.data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self { n_max: self.n_max, data: &self.data + &other.data })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n_max: self.n_max, data: linalg::scale(&self.data, c64::new(s, 0.0)) }
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self { n_max: self.n_max, data: linalg::commutator(&self.data, &other.data) })
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.data)
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.data)
    }

    /// Apply to the basis vector `|j⟩`, returning the full column.
    pub fn apply_to_basis(&self, j: usize) -> Vec<c64> {
        (0..self.dim()).map(|i| self.data[(i, j)]).collect()
    }
}

/// `a ⊗ 1_D ⊗ 1_A`.
pub fn photon_annihilation(basis: &CompositeBasis) -> OperatorMatrix {
    let dim = basis.dim();
    let mut m = linalg::zeros(dim, dim);
    for j in 0..dim {
        let (n, d, a) = basis.unindex(j);
        if n > 0 {
            m[(basis.index(n - 1, d, a), j)] = c64::new((n as f64).sqrt(), 0.0);
        }
    }
    OperatorMatrix { n_max: basis.n_max, data: m }
}

pub fn photon_creation(basis: &CompositeBasis) -> OperatorMatrix {
    photon_annihilation(basis).dagger()
}

pub fn photon_number(basis: &CompositeBasis) -> OperatorMatrix {
    diagonal(basis, |n, _, _| n as f64)
}

/// `|to⟩⟨from|` on one molecular site, identity elsewhere.
pub fn transition(basis: &CompositeBasis, site: Site, from: Level, to: Level) -> Result<OperatorMatrix> {
    let f = from.index_on(site)?;
    let t = to.index_on(site)?;
    let dim = basis.dim();
    let mut m = linalg::zeros(dim, dim);
    for j in 0..dim {
        let (n, d, a) = basis.unindex(j);
        match site {
            Site::Donor if d == f => m[(basis.index(n, t, a), j)] = ONE,
            Site::Acceptor if a == f => m[(basis.index(n, d, t), j)] = ONE,
            _ => {}
        }
    }
    Ok(OperatorMatrix { n_max: basis.n_max, data: m })
}

pub fn projector(basis: &CompositeBasis, site: Site, level: Level) -> Result<OperatorMatrix> {
    transition(basis, site, level, level)
}

/// `N = a†a + |S1⟩⟨S1|_D + |S1⟩⟨S1|_A + |T1⟩⟨T1|_A`.
pub fn excitation_number(basis: &CompositeBasis) -> OperatorMatrix {
    diagonal(basis, |n, d, a| (n + d + usize::from(a != 0)) as f64)
}

fn diagonal(basis: &CompositeBasis, f: impl Fn(usize, usize, usize) -> f64) -> OperatorMatrix {
    let dim = basis.dim();
    let data = Mat::from_fn(dim, dim, |i, j| {
        if i == j {
            let (n, d, a) = basis.unindex(i);
            c64::new(f(n, d, a), 0.0)
        } else {
            ZERO
        }
    });
    OperatorMatrix { n_max: basis.n_max, data }
}

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Density operator on a composite basis.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n_max: usize,
    data: CMat,
}

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity, unit trace and positivity.
    pub fn new(basis: &CompositeBasis, data: CMat) -> Result<Self> {
        let rho = Self::new_unchecked(basis, data)?;
        rho.validate()?;
        Ok(rho)
    }

    pub fn new_unchecked(basis: &CompositeBasis, data: CMat) -> Result<Self> {
        if data.nrows() != basis.dim() || data.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: data.nrows() });
        }
        Ok(Self { n_max: basis.n_max, data })
    }

    pub fn ground(basis: &CompositeBasis) -> Self {
        Self::pure_basis(basis, basis.ground_index())
    }

    pub fn pure_basis(basis: &CompositeBasis, index: usize) -> Self {
        let dim = basis.dim();
        let mut m = linalg::zeros(dim, dim);
        m[(index, index)] = ONE;
        Self { n_max: basis.n_max, data: m }
    }

    /// Incoherent mixture of basis states with the given weights (normalized).
    pub fn mixture(basis: &CompositeBasis, weights: &[(usize, f64)]) -> Result<Self> {
        let total: f64 = weights.iter().map(|w| w.1).sum();
        if !(total > 0.0) || weights.iter().any(|w| w.1 < 0.0) {
            return Err(Error::InvalidParameter("mixture weights must be non-negative with positive sum".into()));
        }
        let dim = basis.dim();
        let mut m = linalg::zeros(dim, dim);
        for &(i, w) in weights {
            m[(i, i)] += c64::new(w / total, 0.0);
        }
        Ok(Self { n_max: basis.n_max, data: m })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn trace(&self) -> c64 {
        linalg::trace(&self.data)
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.data)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let w = linalg::eigvalsh(&linalg::hermitize(&self.data))?;
        Ok(w.into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn population(&self, i: usize) -> f64 {
        self.data[(i, i)].re
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> Result<c64> {
        if op.n_max != self.n_max {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        let d = self.dim();
        let mut s = ZERO;
        for i in 0..d {
            for j in 0..d {
                s += self.data[(i, j)] * op.data[(j, i)];
            }
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_error();
        if h > HERMITICITY_TOL {
            return Err(Error::Domain(format!("density matrix not Hermitian (asymmetry {h:.3e})")));
        }
        let t = self.trace();
        if (t.re - 1.0).abs() > TRACE_TOL || t.im.abs() > TRACE_TOL {
            return Err(Error::Domain(format!("density matrix trace {} + {}i differs from 1", t.re, t.im)));
        }
        let m = self.min_eigenvalue()?;
        if m < -POSITIVITY_TOL {
            return Err(Error::Domain(format!("density matrix has negative eigenvalue {m:.3e}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(build_basis(2).unwrap().dim(), 18);
        assert_eq!(build_basis(1).unwrap().dim(), 12);
        assert!(matches!(build_basis(0), Err(Error::InvalidCutoff(0))));
        let b = build_basis(3).unwrap();
        assert_eq!(b.dim(), 24);
        assert_eq!(b.index_of(1, Level::S1, Level::T1).unwrap(), 10);
    }

    #[test]
    fn index_round_trip() {
        let b = build_basis(4).unwrap();
        for i in 0..b.dim() {
            let (n, d, a) = b.unindex(i);
            assert_eq!(b.index(n, d, a), i);
        }
    }

    #[test]
    fn ladder_elements() {
        let b = build_basis(2).unwrap();
        let a = photon_annihilation(&b);
        let one = b.index_of(1, Level::S0, Level::S0).unwrap();
        let col = a.apply_to_basis(one);
        assert_eq!(col[0], ONE);
        let ad = photon_creation(&b);
        let two = b.index_of(2, Level::S0, Level::S0).unwrap();
        assert!((ad.get(two, one).re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn number_operator_spectrum() {
        let b = build_basis(3).unwrap();
        let a = photon_annihilation(&b);
        let n = a.dagger().mul(&a).unwrap();
        let mut counts = [0usize; 4];
        for i in 0..b.dim() {
            counts[n.get(i, i).re.round() as usize] += 1;
        }
        assert_eq!(counts, [6; 4]);
    }

    #[test]
    fn transitions() {
        let b = build_basis(2).unwrap();
        let lower = transition(&b, Site::Donor, Level::S1, Level::S0).unwrap();
        let s = b.index_of(0, Level::S1, Level::S0).unwrap();
        assert_eq!(lower.apply_to_basis(s)[0], ONE);

        let isc = transition(&b, Site::Acceptor, Level::S1, Level::T1).unwrap();
        let a1 = b.index_of(0, Level::S0, Level::S1).unwrap();
        let t1 = b.index_of(0, Level::S0, Level::T1).unwrap();
        assert_eq!(isc.apply_to_basis(a1)[t1], ONE);
        assert!(isc.apply_to_basis(t1).iter().all(|z| *z == ZERO));

        let raise = transition(&b, Site::Donor, Level::S0, Level::S1).unwrap();
        assert_eq!(linalg::max_abs(&(raise.dagger().matrix() - lower.matrix())), 0.0);

        assert!(transition(&b, Site::Donor, Level::T1, Level::S0).is_err());
    }

    #[test]
    fn excitation_counts() {
        let b = build_basis(2).unwrap();
        let n = excitation_number(&b);
        let i = b.index_of(0, Level::S1, Level::T1).unwrap();
        assert_eq!(n.get(i, i).re, 2.0);
        assert_eq!(n.get(0, 0).re, 0.0);
    }

    #[test]
    fn cross_cutoff_use_is_rejected() {
        let b2 = build_basis(2).unwrap();
        let b3 = build_basis(3).unwrap();
        assert!(photon_annihilation(&b2).mul(&photon_annihilation(&b3)).is_err());
        assert!(DensityMatrix::ground(&b2).expectation(&photon_number(&b3)).is_err());
    }

    #[test]
    fn mixture_photons() {
        let b = build_basis(2).unwrap();
        let one = b.index_of(1, Level::S0, Level::S0).unwrap();
        let rho = DensityMatrix::mixture(&b, &[(0, 0.5), (one, 0.5)]).unwrap();
        rho.validate().unwrap();
        assert!((rho.expectation(&photon_number(&b)).unwrap().re - 0.5).abs() < 1e-15);
    }
}
