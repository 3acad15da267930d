//! Thin dense linear-algebra layer over `faer`.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};

use crate::error::{Error, Result};

pub use faer::c64;

pub type CMat = Mat<c64>;
pub type RMat = Mat<f64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

pub fn zeros(n: usize, m: usize) -> CMat {
    Mat::zeros(n, m)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn transpose(a: &CMat) -> CMat {
    a.transpose().to_owned()
}

pub fn conj(a: &CMat) -> CMat {
    a.conjugate().to_owned()
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

pub fn scale(a: &CMat, s: c64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn frobenius(a: &CMat) -> f64 {
    a.norm_l2()
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_error(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn hermitize(a: &CMat) -> CMat {
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

pub fn trace(a: &CMat) -> c64 {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

/// General complex eigendecomposition; eigenvectors are columns with unit norm.
pub fn eig(a: &CMat) -> Result<(Vec<c64>, CMat)> {
    let e = a.eigen().map_err(|e| Error::NumericalFailure(format!("eigendecomposition did not converge: {e:?}")))?;
    let vals: Vec<c64> = e.S().column_vector().iter().copied().collect();
    let mut vecs = e.U().to_owned();
    for j in 0..vecs.ncols() {
        let nrm = vecs.col(j).norm_l2();
        if nrm > 0.0 {
            for i in 0..vecs.nrows() {
                vecs[(i, j)] /= nrm;
            }
        }
    }
    Ok((vals, vecs))
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn eigh(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("hermitian eigensolver failed: {e:?}")))?;
    let vals = e.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn eigvalsh(a: &CMat) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("hermitian eigensolver failed: {e:?}")))
}

/// Real symmetric eigendecomposition, eigenvalues ascending.
pub fn eigh_real(a: &RMat) -> Result<(Vec<f64>, RMat)> {
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("symmetric eigensolver failed: {e:?}")))?;
    Ok((e.S().column_vector().iter().copied().collect(), e.U().to_owned()))
}

pub fn solve(a: &CMat, b: &CMat) -> CMat {
    a.partial_piv_lu().solve(b)
}

pub fn inverse(a: &CMat) -> CMat {
    a.partial_piv_lu().inverse()
}

pub fn solve_real(a: &RMat, b: &RMat) -> RMat {
    a.partial_piv_lu().solve(b)
}

pub fn inverse_real(a: &RMat) -> RMat {
    a.partial_piv_lu().inverse()
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(a: &CMat) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Column-stacking vectorization.
pub fn vec_of(a: &CMat) -> Vec<c64> {
    let (n, m) = (a.nrows(), a.ncols());
    let mut v = Vec::with_capacity(n * m);
    for j in 0..m {
        for i in 0..n {
            v.push(a[(i, j)]);
        }
    }
    v
}

pub fn unvec(v: &[c64], n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| v[i + j * n])
}

pub fn matvec(a: &CMat, x: &[c64]) -> Vec<c64> {
    let mut y = vec![ZERO; a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == ZERO {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += a[(i, j)] * xj;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn kron_matches_definition() {
        let a = Mat::from_fn(2, 2, |i, j| c((i * 2 + j) as f64, 0.0));
        let b = Mat::from_fn(2, 2, |i, j| c(0.0, (i + j) as f64));
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 2 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn vec_identity_for_products() {
        let n = 3;
        let a = Mat::from_fn(n, n, |i, j| c(i as f64 - j as f64, (i * j) as f64));
        let x = Mat::from_fn(n, n, |i, j| c((i + 2 * j) as f64, 1.0));
        let b = Mat::from_fn(n, n, |i, j| c(1.0 + (i * 3 + j) as f64, -0.5));
        let lhs = vec_of(&(&a * &x * &b));
        let rhs = matvec(&kron(&transpose(&b), &a), &vec_of(&x));
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - r).norm() < 1e-12);
        }
    }

    #[test]
    fn eig_reconstructs() {
        let a = Mat::from_fn(4, 4, |i, j| c((i * 4 + j) as f64 * 0.1, (i as f64) - (j as f64)));
        let (w, v) = eig(&a).unwrap();
        for k in 0..4 {
            let x: Vec<c64> = (0..4).map(|i| v[(i, k)]).collect();
            let ax = matvec(&a, &x);
            for i in 0..4 {
                assert!((ax[i] - w[k] * x[i]).norm() < 1e-10);
            }
        }
    }
}
