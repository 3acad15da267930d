//! Bounded Nelder–Mead simplex search.

use crate::error::{Error, Result};

use super::{FitParam, FitResult};

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Largest vertex distance from the best vertex, per coordinate.
    pub x_tol: f64,
    /// Spread of objective values over the simplex.
    pub f_tol: f64,
    /// Initial simplex edge per coordinate; defaults to 5% of |x0| (or 2.5e-4).
    pub initial_step: Option<Vec<f64>>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { max_iter: 5000, x_tol: 1e-9, f_tol: 1e-14, initial_step: None }
    }
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (xi, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(lo, hi);
    }
}

fn eval<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64]) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteObjective(x.to_vec()))
    }
}

fn lerp(a: &[f64], b: &[f64], t: f64, bounds: &[(f64, f64)]) -> Vec<f64> {
    let mut x: Vec<f64> = a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect();
    project(&mut x, bounds);
    x
}

/// Minimizes `f` inside the box `bounds`, starting from `x0`.
///
/// Trial points are projected onto the box. The returned point is never worse
/// than `x0`. Convergence requires both the simplex size and the objective
/// spread to fall below their tolerances.
pub fn minimize<F>(mut f: F, x0: &[f64], bounds: &[(f64, f64)], opts: &MinimizeOptions) -> Result<FitResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no free parameters".into()));
    }
    if bounds.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: bounds.len() });
    }
    for (i, (&x, &(lo, hi))) in x0.iter().zip(bounds).enumerate() {
        if !(lo <= hi) || !(x >= lo && x <= hi) {
            return Err(Error::InvalidParameter(format!("x0[{i}] = {x} outside bounds [{lo}, {hi}]")));
        }
    }
    let steps: Vec<f64> = match &opts.initial_step {
        Some(s) if s.len() == n => s.clone(),
        Some(s) => return Err(Error::DimensionMismatch { expected: n, found: s.len() }),
        None => x0.iter().map(|&x| if x != 0.0 { 0.05 * x.abs() } else { 2.5e-4 }).collect(),
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(&mut f, x0)?));
    for i in 0..n {
        let mut x = x0.to_vec();
        let (lo, hi) = bounds[i];
        x[i] = if x0[i] + steps[i] <= hi { x0[i] + steps[i] } else { (x0[i] - steps[i]).max(lo) };
        let fx = eval(&mut f, &x)?;
        simplex.push((x, fx));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = simplex[n].1 - simplex[0].1;
        if diameter <= opts.x_tol && spread <= opts.f_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let xr = lerp(&centroid, &worst.0, -1.0, bounds);
        let fr = eval(&mut f, &xr)?;

        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &worst.0, -2.0, bounds);
            let fe = eval(&mut f, &xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = lerp(&centroid, &xr, 0.5, bounds);
            let fc = eval(&mut f, &xc)?;
            (xc, fc)
        } else {
            let xc = lerp(&centroid, &worst.0, 0.5, bounds);
            let fc = eval(&mut f, &xc)?;
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x = lerp(&x_best, &v.0, 0.5, bounds);
            let fx = eval(&mut f, &x)?;
            *v = (x, fx);
        }
    }

    let (x, objective) = simplex.swap_remove(0);
    Ok(FitResult {
        params: x.iter().enumerate().map(|(i, &v)| FitParam::new(format!("x{i}"), v)).collect(),
        objective,
        iterations,
        converged,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const WIDE: (f64, f64) = (-10.0, 10.0);

    #[test]
    fn quadratic_1d() {
        let r = minimize(|x| (x[0] - 3.0).powi(2), &[0.0], &[WIDE], &MinimizeOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.values()[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(f, &[-1.2, 1.0], &[WIDE, WIDE], &MinimizeOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.values()[0] - 1.0).abs() < 1e-4 && (r.values()[1] - 1.0).abs() < 1e-4, "{:?}", r.values());
    }

    #[test]
    fn constant_objective_returns_start() {
        let r = minimize(|_| 4.0, &[0.3, -2.0], &[WIDE, WIDE], &MinimizeOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.values(), vec![0.3, -2.0]);
        assert_eq!(r.objective, 4.0);
    }

    #[test]
    fn stays_inside_bounds() {
        let r = minimize(|x| (x[0] + 5.0).powi(2), &[1.0], &[(0.0, 2.0)], &MinimizeOptions::default()).unwrap();
        assert_eq!(r.values()[0], 0.0);
    }

    #[test]
    fn start_on_upper_bound() {
        let r = minimize(|x| (x[0] - 0.5).powi(2), &[2.0], &[(0.0, 2.0)], &MinimizeOptions::default()).unwrap();
        assert!((r.values()[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn non_finite_reports_point() {
        let e = minimize(|x| if x[0] > 0.5 { f64::NAN } else { -x[0] }, &[0.0], &[WIDE], &MinimizeOptions::default());
        match e {
            Err(Error::NonFiniteObjective(p)) => assert!(p[0] > 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn start_outside_bounds_is_rejected() {
        assert!(minimize(|x| x[0], &[3.0], &[(0.0, 1.0)], &MinimizeOptions::default()).is_err());
    }
}
