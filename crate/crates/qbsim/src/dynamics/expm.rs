//! Scaling-and-squaring matrix exponential with a degree-13 Padé approximant.

use crate::linalg::{self, c64, CMat};

const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA_13: f64 = 5.371920351148152;

fn lin(terms: &[(f64, &CMat)], n: usize) -> CMat {
    let mut out = linalg::zeros(n, n);
    for &(c, m) in terms {
        out += linalg::scale(m, c64::new(c, 0.0));
    }
    out
}

/// exp(A) for a dense complex matrix.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = linalg::norm1(a);
    if norm == 0.0 {
        return linalg::identity(n);
    }
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = linalg::scale(a, c64::new(0.5f64.powi(s), 0.0));
    let id = linalg::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * lin(&[(B[13], &a6), (B[11], &a4), (B[9], &a2)], n)
        + lin(&[(B[7], &a6), (B[5], &a4), (B[3], &a2), (B[1], &id)], n);
    let u = &a * u_inner;
    let v = &a6 * lin(&[(B[12], &a6), (B[10], &a4), (B[8], &a2)], n)
        + lin(&[(B[6], &a6), (B[4], &a4), (B[2], &a2), (B[0], &id)], n);

    let mut r = linalg::solve(&(&v - &u), &(&v + &u));
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// exp(A t) x for a vector `x`.
pub fn expm_apply(a: &CMat, t: f64, x: &[c64]) -> Vec<c64> {
    let e = expm(&linalg::scale(a, c64::new(t, 0.0)));
    linalg::matvec(&e, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    #[test]
    fn diagonal_matrix() {
        let a =
            Mat::from_fn(3, 3, |i, j| if i == j { c64::new(-(i as f64) * 3.0, i as f64) } else { c64::new(0.0, 0.0) });
        let e = expm(&a);
        for i in 0..3 {
            let want = (c64::new(-(i as f64) * 3.0, i as f64)).exp();
            assert!((e[(i, i)] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn rotation_generator() {
        let th = 7.3;
        let a = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c64::new(-th, 0.0),
            (1, 0) => c64::new(th, 0.0),
            _ => c64::new(0.0, 0.0),
        });
        let e = expm(&a);
        assert!((e[(0, 0)].re - th.cos()).abs() < 1e-12);
        assert!((e[(1, 0)].re - th.sin()).abs() < 1e-12);
    }

    #[test]
    fn jordan_block() {
        let a = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => c64::new(-1.0, 0.0),
            (0, 1) => c64::new(1.0, 0.0),
            _ => c64::new(0.0, 0.0),
        });
        let e = expm(&a);
        let em1 = (-1.0f64).exp();
        assert!((e[(0, 0)].re - em1).abs() < 1e-14);
        assert!((e[(0, 1)].re - em1).abs() < 1e-14);
    }
}
