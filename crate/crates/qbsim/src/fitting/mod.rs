//! Parameter estimation: coupled-oscillator dispersion fits, triplet-coupling
//! fits against emission features, and the shared simplex minimizer.

mod dispersion;
pub mod io;
mod minimize;
mod triplet;

pub use dispersion::{
    dispersion_model, fit_coupled_oscillator, fit_coupled_oscillator_with, fit_noise_ensemble, synthesize_dispersion,
    DispersionData, DispersionFit, DispersionFitOptions, DispersionParam, DispersionRecord,
};
pub use minimize::{minimize, MinimizeOptions};
pub use triplet::{
    fit_triplet_coupling, fit_triplet_coupling_with, FeatureWeights, TripletFit, TripletFitOptions, FLAT_FEATURE_TOL,
};

use crate::linalg;
use faer::Mat;

#[derive(Clone, Debug, PartialEq)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    /// Linearized standard error; NaN when not available.
    pub stderr_proxy: f64,
}

impl FitParam {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, stderr_proxy: f64::NAN }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub params: Vec<FitParam>,
    /// Final sum of squared residuals.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }
}

/// sqrt(diag((JᵀJ)⁻¹) · SSR/(m − p)) from a central-difference Jacobian of the
/// weighted residual vector. NaN entries when m ≤ p or JᵀJ is singular.
pub fn stderr_proxy<F>(residuals: F, x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let p = x.len();
    let nan = vec![f64::NAN; p];
    let Some(r0) = residuals(x) else { return nan };
    let m = r0.len();
    if m <= p {
        return nan;
    }
    let mut jac = Mat::<f64>::zeros(m, p);
    for k in 0..p {
        let h = 1e-6 * x[k].abs().max(1e-3);
        let (lo, hi) = bounds[k];
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] = (x[k] + h).min(hi);
        xm[k] = (x[k] - h).max(lo);
        let (Some(rp), Some(rm)) = (residuals(&xp), residuals(&xm)) else { return nan };
        let dx = xp[k] - xm[k];
        if dx <= 0.0 {
            return nan;
        }
        for i in 0..m {
            jac[(i, k)] = (rp[i] - rm[i]) / dx;
        }
    }
    let jtj = jac.transpose() * &jac;
    if (0..p).any(|k| jtj[(k, k)] <= 0.0) {
        return nan;
    }
    let cov = linalg::inverse_real(&jtj);
    let s2 = r0.iter().map(|r| r * r).sum::<f64>() / (m - p) as f64;
    (0..p)
        .map(|k| {
            let v = cov[(k, k)] * s2;
            if v.is_finite() && v >= 0.0 {
                v.sqrt()
            } else {
                f64::NAN
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_of_line_fit() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.1, 0.9, 2.1, 2.9];
        let res = |p: &[f64]| Some(xs.iter().zip(&ys).map(|(x, y)| p[0] + p[1] * x - y).collect::<Vec<_>>());
        let se = stderr_proxy(res, &[0.06, 0.96], &[(-10.0, 10.0), (-10.0, 10.0)]);
        // ordinary least squares: se(slope) = sqrt(s²/Σ(x-x̄)²)
        let ssr: f64 = res(&[0.06, 0.96]).unwrap().iter().map(|r| r * r).sum();
        let want = (ssr / 2.0 / 5.0).sqrt();
        assert!((se[1] - want).abs() < 1e-6, "{se:?} vs {want}");
    }

    #[test]
    fn stderr_needs_redundancy() {
        let se = stderr_proxy(|p: &[f64]| Some(vec![p[0]]), &[1.0], &[(0.0, 2.0)]);
        assert!(se[0].is_nan());
    }
}
