//! One-dimensional J_T fit against relative emission features.

use crate::error::{Error, Result};
use crate::model::{DeviceParams, RateParams};
use crate::observables::{FeatureOptions, FeatureRecord};
use crate::par::Execution;
use crate::protocols::sweep_detuning_features;

use super::{minimize, FitParam, FitResult, MinimizeOptions};

pub const PRESCAN_POINTS: usize = 50;

/// Measured features whose phosphorescence-rate column stays within this of
/// 1 carry no triplet signal.
pub const FLAT_FEATURE_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureWeights {
    pub fluorescence: f64,
    pub sharpness: f64,
    pub phosphorescence: f64,
}

impl Default for FeatureWeights {
    fn default() -> Self {
        Self { fluorescence: 1.0, sharpness: 1.0, phosphorescence: 1.0 }
    }
}

#[derive(Clone, Debug)]
pub struct TripletFitOptions {
    pub weights: FeatureWeights,
    pub features: FeatureOptions,
    /// Device the measured features are normalized to.
    pub reference: usize,
    pub minimize: MinimizeOptions,
    /// Device-level parallelism inside one objective evaluation.
    pub exec: Execution,
}

impl Default for TripletFitOptions {
    fn default() -> Self {
        Self {
            weights: FeatureWeights::default(),
            features: FeatureOptions::default(),
            reference: 0,
            minimize: MinimizeOptions { x_tol: 1e-8, f_tol: 1e-16, ..Default::default() },
            exec: Execution::Sequential,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TripletFit {
    pub result: FitResult,
    pub j_t: f64,
    /// Weighted squared mismatch of (fluorescence, sharpness, phosphorescence rate).
    pub per_feature: [f64; 3],
    pub at_lower_bound: bool,
    pub unidentifiable: bool,
}

pub fn fit_triplet_coupling(
    features: &[FeatureRecord],
    devices: &[DeviceParams],
    rates: &RateParams,
    j_t_bounds: (f64, f64),
) -> Result<TripletFit> {
    fit_triplet_coupling_with(features, devices, rates, j_t_bounds, &TripletFitOptions::default())
}

fn mismatch(model: &[FeatureRecord], measured: &[FeatureRecord], w: &FeatureWeights) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (m, d) in model.iter().zip(measured) {
        out[0] += w.fluorescence * (m.rel_fluorescence_intensity - d.rel_fluorescence_intensity).powi(2);
        out[1] += w.sharpness * (m.rel_sharpness - d.rel_sharpness).powi(2);
        out[2] += w.phosphorescence * (m.rel_phosphorescence_rate - d.rel_phosphorescence_rate).powi(2);
    }
    out
}

pub fn fit_triplet_coupling_with(
    features: &[FeatureRecord],
    devices: &[DeviceParams],
    rates: &RateParams,
    j_t_bounds: (f64, f64),
    opts: &TripletFitOptions,
) -> Result<TripletFit> {
    let (lo, hi) = j_t_bounds;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(Error::InvalidParameter(format!("degenerate J_T bounds [{lo}, {hi}]")));
    }
    if features.len() != devices.len() {
        return Err(Error::DimensionMismatch { expected: devices.len(), found: features.len() });
    }
    if features.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, found: features.len() });
    }
    let w = opts.weights;
    if ![w.fluorescence, w.sharpness, w.phosphorescence].iter().all(|x| *x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter("feature weights must be non-negative".into()));
    }

    let terms = |j_t: f64| -> Result<[f64; 3]> {
        let model = sweep_detuning_features(devices, rates, j_t, opts.reference, &opts.features, opts.exec)?;
        Ok(mismatch(&model, features, &w))
    };

    let scan_lo = if lo > 0.0 { lo } else { hi * 1e-4 };
    let grid: Vec<f64> = (0..PRESCAN_POINTS)
        .map(|k| (scan_lo.ln() + (hi.ln() - scan_lo.ln()) * k as f64 / (PRESCAN_POINTS - 1) as f64).exp())
        .collect();
    let mut scan = Vec::with_capacity(grid.len());
    for &j in &grid {
        scan.push(terms(j)?.iter().sum::<f64>());
    }
    let k0 = (0..grid.len()).min_by(|&a, &b| scan[a].total_cmp(&scan[b])).unwrap_or(0);
    let x0 = grid[k0];
    let step = if k0 + 1 < grid.len() { grid[k0 + 1] - x0 } else { x0 - grid[k0 - 1] };

    let mut first_error = None;
    let objective = |x: &[f64]| match terms(x[0]) {
        Ok(t) => t.iter().sum(),
        Err(e) => {
            first_error.get_or_insert(e);
            f64::NAN
        }
    };
    let mopts = MinimizeOptions { initial_step: Some(vec![step]), ..opts.minimize.clone() };
    let minimized = minimize(objective, &[x0], &[(lo, hi)], &mopts);
    let mut result = match (minimized, first_error) {
        (Err(Error::NonFiniteObjective(_)), Some(e)) => return Err(e),
        (r, _) => r?,
    };
    let j_t = result.values()[0];
    let per_feature = terms(j_t)?;

    let mut warnings = Vec::new();
    let at_lower_bound = j_t <= lo + 1e-9 * hi || j_t <= grid[0];
    if at_lower_bound {
        warnings.push(format!("J_T fit sits at the lower bound {lo} eV"));
    }
    let unidentifiable = features.iter().all(|f| (f.rel_phosphorescence_rate - 1.0).abs() <= FLAT_FEATURE_TOL);
    if unidentifiable {
        let msg = "measured phosphorescence rates are flat; J_T is unidentifiable".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    if !result.converged {
        warnings.push(format!("simplex did not converge in {} iterations", result.iterations));
    }
    result.params = vec![FitParam::new("j_t", j_t)];
    result.warnings = warnings;
    Ok(TripletFit { result, j_t, per_feature, at_lower_bound, unidentifiable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn degenerate_bounds_rejected() {
        let devs = presets::cavities();
        let f = vec![
            FeatureRecord {
                delta_e: 0.0,
                rel_fluorescence_intensity: 1.0,
                rel_sharpness: 1.0,
                rel_phosphorescence_rate: 1.0
            };
            5
        ];
        let r = presets::rates_default();
        assert!(fit_triplet_coupling(&f, &devs, &r, (0.01, 0.01)).is_err());
        assert!(fit_triplet_coupling(&f, &devs, &r, (0.02, 0.01)).is_err());
        assert!(fit_triplet_coupling(&f[..2], &devs[..2], &r, (0.0, 0.01)).is_err());
    }
}
