//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_RED` are evaluated at full strength and reported,
//! but do not fail the process; any other failure does.

use std::process::ExitCode;
use std::time::Instant;

use qbsim::dynamics::{build_liouvillian, propagate, steady_state_report};
use qbsim::fitting::{
    fit_coupled_oscillator, fit_noise_ensemble, fit_triplet_coupling, synthesize_dispersion, DispersionParam,
};
use qbsim::hilbert::{build_basis, photon_number, DensityMatrix, Level, OperatorMatrix};
use qbsim::model::{build_jc_hamiltonian, presets, DeviceParams, RateParams};
use qbsim::observables::{
    ev_to_watt_hours, fit_exponential_decay, trajectory_populations, trapezoid_integral, volumetric_energy_density,
    FeatureOptions, PopulationRecord,
};
use qbsim::polaritons::detuning;
use qbsim::protocols::{
    converged_steady_state, linspace, run_scenario, sweep_cavity_energy, sweep_detuning_features, Scenario,
    CONVERGENCE_TOL,
};
use qbsim::Execution;

const KNOWN_RED: [&str; 3] = ["C4", "C5", "C6"];

struct Report {
    pass: bool,
    lines: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Self { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: String) {
        self.pass &= ok;
        self.lines.push(format!("{} {msg}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, msg: String) {
        self.lines.push(format!("     {msg}"));
    }
}

/// Lowest root of det(E − H) for the symmetric 3×3 arrow matrix
/// [[c, d, a], [d, x, 0], [a, 0, y]], by bisection below min(c, x, y).
fn lowest_arrow_root(c: f64, x: f64, y: f64, d: f64, a: f64) -> f64 {
    let p = |e: f64| (e - c) * (e - x) * (e - y) - d * d * (e - y) - a * a * (e - x);
    let mut hi = c.min(x).min(y);
    let mut lo = hi - 1.0 - d.abs() - a.abs();
    // p(lo) < 0 and p(hi) ≥ 0 (odd cubic, interlacing)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn arrow_poly(c: f64, x: f64, y: f64, d: f64, a: f64, e: f64) -> f64 {
    (e - c) * (e - x) * (e - y) - d * d * (e - y) - a * a * (e - x)
}

fn c1_cavity_detuning() -> Report {
    let mut r = Report::new();
    for k in 1..=5 {
        let dev = presets::cavity(k).unwrap();
        let tab = presets::tabulated_detuning(k).unwrap();
        let lib = detuning(&dev, 0.0).unwrap().delta_e;
        let e = lowest_arrow_root(dev.omega_c0, dev.omega_d, dev.omega_a, dev.j_d, dev.j_a);
        let oracle = e - dev.omega_t;
        let resid = arrow_poly(dev.omega_c0, dev.omega_d, dev.omega_a, dev.j_d, dev.j_a, lib + dev.omega_t).abs();
        r.check(
            (lib - tab).abs() <= 0.005 && (lib - oracle).abs() < 1e-10 && resid < 2e-5,
            format!(
                "cavity {k}: dE = {lib:+.5} eV (table {tab:+.3}, |diff| {:.5} <= 0.005), oracle {oracle:+.5}, char-poly residual {resid:.1e} < 2e-5",
                (lib - tab).abs()
            ),
        );
    }
    r
}

fn c2_arithmetic() -> Report {
    let mut r = Report::new();
    let rho = volumetric_energy_density(0.5, 1.75, 3.01e18).unwrap();
    let rel = (rho - 2.63e18).abs() / 2.63e18;
    r.check(rel <= 5e-3, format!("volumetric density {rho:.4e} eV/cm^3 vs 2.63e18, rel err {rel:.2e} <= 5e-3"));
    let wh = ev_to_watt_hours(1.23e14);
    let mantissa = wh / 1e-9;
    let rel = (mantissa - 5.47).abs() / 5.47;
    r.check(rel <= 1e-3, format!("capacity {wh:.5e} Wh, mantissa {mantissa:.4} vs 5.47, rel err {rel:.2e} <= 1e-3"));
    r
}

fn state_checks(states: &[DensityMatrix]) -> (f64, f64) {
    let mut trace = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for s in states {
        trace = trace.max((s.trace().re - 1.0).abs());
        min_eig = min_eig.min(s.min_eigenvalue().unwrap());
    }
    (trace, min_eig)
}

fn c3_dynamics_oracles() -> Report {
    let mut r = Report::new();
    let mut all_states = Vec::new();

    let b = build_basis(2).unwrap();
    let gc = 50.0;
    let rates = RateParams { gamma_c: gc, ..RateParams::zero() };
    let l = build_liouvillian(&OperatorMatrix::zeros(&b), &rates, &b).unwrap();
    let one = b.index_of(1, Level::S0, Level::S0).unwrap();
    let times: Vec<f64> = (1..=40).map(|k| 0.005 * k as f64).collect();
    let tr = propagate(&l, &DensityMatrix::pure_basis(&b, one), &times).unwrap();
    let err =
        times.iter().zip(&tr.states).map(|(t, s)| (s.population(one) - (-gc * t).exp()).abs()).fold(0.0, f64::max);
    r.check(err <= 1e-8, format!("cavity decay: max |p1 - exp(-gC t)| = {err:.2e} <= 1e-8"));
    all_states.extend(tr.states);

    let b3 = build_basis(3).unwrap();
    let h = build_jc_hamiltonian(&presets::mechanism2().uncoupled(), &b3, 0.0).unwrap();
    let rates = RateParams { gamma_p: 10.0, gamma_c: 50.0, gamma_d: 1.0, gamma_a: 1.0, gamma_ic: 1.0, gamma_isc: 0.0 };
    let ss = steady_state_report(&build_liouvillian(&h, &rates, &b3).unwrap()).unwrap();
    let n = ss.rho.expectation(&photon_number(&b3)).unwrap().re;
    r.check(
        (n - 0.25).abs() <= 2e-2,
        format!("pump/loss steady <n> = {n:.5} at n_max=3, |<n> - 0.25| = {:.4} <= 2e-2", (n - 0.25).abs()),
    );
    all_states.push(ss.rho);

    let rates = RateParams { gamma_a: 1.0, gamma_isc: 0.48, ..RateParams::zero() };
    let h = build_jc_hamiltonian(&presets::mechanism2().uncoupled(), &b, 0.0).unwrap();
    let l = build_liouvillian(&h, &rates, &b).unwrap();
    let s1 = b.index_of(0, Level::S0, Level::S1).unwrap();
    let tr = propagate(&l, &DensityMatrix::pure_basis(&b, s1), &[1.0, 10.0, 100.0, 1000.0]).unwrap();
    let t1 = b.index_of(0, Level::S0, Level::T1).unwrap();
    let y = tr.states.last().unwrap().population(t1);
    let oracle = 0.48 / 1.48;
    r.check(
        (y - oracle).abs() <= 1e-6,
        format!("ISC yield {y:.7} vs gISC/(gISC+gA) = {oracle:.7} (0.3243), |diff| {:.1e} <= 1e-6", (y - oracle).abs()),
    );
    all_states.extend(tr.states);

    for dev in [presets::mechanism1(), presets::mechanism2()] {
        let s = Scenario::charge_relax(dev, presets::rates_default(), 100.0, 1e8, false);
        all_states.extend(run_scenario(&s).unwrap().states);
    }
    let (tr_err, min_eig) = state_checks(&all_states);
    r.check(
        tr_err <= 1e-9 && min_eig >= -1e-9,
        format!(
            "{} propagated states: max |tr - 1| = {tr_err:.1e} <= 1e-9, min eigenvalue {min_eig:.1e} >= -1e-9",
            all_states.len()
        ),
    );
    r
}

fn triplet_series(p: &[PopulationRecord], from: f64) -> Vec<(f64, f64)> {
    p.iter().filter(|x| x.t >= from).map(|x| (x.t, x.p_acceptor_t1)).collect()
}

fn c4_mechanisms() -> Report {
    let mut r = Report::new();
    let rates = presets::rates_default();
    let steady = |d: &DeviceParams| converged_steady_state(d, &rates, 0.0, 2, 6, CONVERGENCE_TOL).unwrap();
    let m1 = steady(&presets::mechanism1());
    let m2 = steady(&presets::mechanism2());
    r.check(
        m1.populations.p_acceptor_t1 >= 0.9,
        format!(
            "(a) mechanism 1 steady p_T1 = {:.4} >= 0.9 (n_max {}, cutoff change {:.1e})",
            m1.populations.p_acceptor_t1, m1.n_max, m1.max_change
        ),
    );
    r.check(
        m2.populations.p_acceptor_t1 < m1.populations.p_acceptor_t1,
        format!(
            "(b) mechanism 2 steady p_T1 = {:.4} < mechanism 1 {:.4}",
            m2.populations.p_acceptor_t1, m1.populations.p_acceptor_t1
        ),
    );

    let t_off = 100.0;
    let s = Scenario::charge_relax(presets::mechanism1(), rates, t_off, 1e8, true);
    let traj = run_scenario(&s).unwrap();
    let b = build_basis(s.n_max).unwrap();
    let pops = trajectory_populations(&traj, &b).unwrap();
    let at_off = pops.iter().find(|p| p.t == t_off).unwrap();
    let k = rates.gamma_a + rates.gamma_isc;
    let g = rates.gamma_ic;
    let analytic = |tau: f64| {
        at_off.p_acceptor_t1 * (-g * tau).exp()
            + at_off.p_acceptor_s1 * rates.gamma_isc / (k - g) * ((-g * tau).exp() - (-k * tau).exp())
    };
    let relax = triplet_series(&pops, t_off);
    let dev = relax.iter().map(|&(t, p)| (p - analytic(t - t_off)).abs()).fold(0.0, f64::max);
    let fit = fit_exponential_decay(&relax, (t_off + 1e2, t_off + 1e5)).unwrap();
    let rel = (fit.rate - g).abs() / g;
    r.check(
        dev <= 1e-8 && rel <= 1e-8,
        format!("(c) open cavity: max |p_T - analytic| = {dev:.1e} <= 1e-8, fitted rate {:.6e} /ns vs gIC {g:e}, rel {rel:.1e} <= 1e-8", fit.rate),
    );

    let closed = |d: DeviceParams| {
        let s = Scenario::charge_relax(d, rates, t_off, 1e8, false);
        let traj = run_scenario(&s).unwrap();
        trajectory_populations(&traj, &build_basis(s.n_max).unwrap()).unwrap()
    };
    let p1 = closed(presets::mechanism1());
    let p1_off = p1.iter().find(|p| p.t == t_off).unwrap().p_acceptor_t1;
    let p1_late = p1.iter().rev().find(|p| p.t <= t_off + 1e3).unwrap();
    let retained = p1_late.p_acceptor_t1 / p1_off;
    r.check(
        retained >= 0.9,
        format!(
            "(d) mechanism 1 closed cavity retains {retained:.4} of p_T1 = {p1_off:.4} after {:.0} ns (>= 0.9)",
            p1_late.t - t_off
        ),
    );
    let p2 = closed(presets::mechanism2());
    let fit2 = fit_exponential_decay(&triplet_series(&p2, t_off), (t_off + 1e2, t_off + 1e5)).unwrap();
    let ratio = fit2.rate / g;
    r.check(
        ratio >= 1e3,
        format!("(d) mechanism 2 closed-cavity triplet decay {:.4e} /ns = {ratio:.1} x gIC (>= 1e3)", fit2.rate),
    );
    r
}

fn c5_resonance() -> Report {
    let mut r = Report::new();
    let dev = presets::mechanism2();
    let oracle = dev.omega_t + dev.j_d * dev.j_d / (dev.omega_d - dev.omega_t);
    let grid = linspace(1.6, 2.1, 100);
    let s = Scenario::continuous(dev, presets::rates_default(), 10.0);
    let sweep = sweep_cavity_energy(&s, &grid, 10.0, Execution::default()).unwrap();
    let peak = sweep.argmax().unwrap();
    r.check(
        (peak - 1.856).abs() <= 0.02,
        format!("sweep argmax over [1.6, 2.1] eV (100 pts, probe 10 ns) = {peak:.4} eV, target 1.856 +- 0.02 (2x2 LP oracle {oracle:.5})"),
    );
    let local = sweep
        .points
        .iter()
        .filter(|p| (p.omega0 - oracle).abs() <= 0.05)
        .max_by(|a, b| a.populations.p_acceptor_t1.total_cmp(&b.populations.p_acceptor_t1))
        .unwrap();
    let global = sweep.points.iter().find(|p| p.omega0 == peak).unwrap();
    r.note(format!(
        "local maximum near oracle: {:.4} eV (p_T1 {:.3e}); global maximum p_T1 {:.3e}",
        local.omega0, local.populations.p_acceptor_t1, global.populations.p_acceptor_t1
    ));
    r
}

fn c6_feature_trends() -> Report {
    let mut r = Report::new();
    let devices = presets::cavities();
    let rates = presets::rates_default();
    let feats =
        sweep_detuning_features(&devices, &rates, 5e-3, 0, &FeatureOptions::default(), Execution::default()).unwrap();
    let argmax = (0..5)
        .max_by(|&a, &b| feats[a].rel_phosphorescence_rate.total_cmp(&feats[b].rel_phosphorescence_rate))
        .unwrap();
    let argmin = (0..5)
        .min_by(|&a, &b| feats[a].rel_fluorescence_intensity.total_cmp(&feats[b].rel_fluorescence_intensity))
        .unwrap();
    for (k, f) in feats.iter().enumerate() {
        r.note(format!(
            "cavity {}: dE {:+.4}, rel fluor {:.5}, rel sharp {:.4}, rel phos rate {:.4}",
            k + 1,
            f.delta_e,
            f.rel_fluorescence_intensity,
            f.rel_sharpness,
            f.rel_phosphorescence_rate
        ));
    }
    r.check(argmax == 3, format!("phosphorescence rate maximal at cavity {} (want 4)", argmax + 1));
    r.check(argmin == 3, format!("fluorescence intensity minimal at cavity {} (want 4)", argmin + 1));
    let e = feats[3].rel_phosphorescence_rate;
    r.check((1.3..=3.0).contains(&e), format!("cavity 4 phosphorescence-rate enhancement {e:.4} in [1.3, 3]"));
    r
}

type Getter = fn(&DeviceParams) -> f64;

fn c7_fit_round_trips() -> Report {
    let mut r = Report::new();
    let truth = presets::cavity(1).unwrap();
    let angles: Vec<f64> = (0..=6).map(|k| 10.0 * k as f64).collect();
    let init = DeviceParams { omega_c0: 2.15, j_d: 0.21, j_a: 0.085, ..truth };
    let free = DispersionParam::DEFAULT_FREE;
    let dev = |d: &DeviceParams| {
        [(d.omega_c0 - truth.omega_c0).abs(), (d.j_d - truth.j_d).abs(), (d.j_a - truth.j_a).abs()]
            .into_iter()
            .fold(0.0, f64::max)
    };

    let data = synthesize_dispersion(&truth, &angles, 0.0, 0).unwrap();
    let fit = fit_coupled_oscillator(&data, &init, &free).unwrap();
    r.check(
        dev(&fit.device) <= 1e-4 && fit.result.objective < 1e-10,
        format!(
            "noiseless dispersion: max param error {:.1e} eV <= 1e-4, residual {:.1e} < 1e-10",
            dev(&fit.device),
            fit.result.objective
        ),
    );

    let seeds: Vec<u64> = (0..20).collect();
    let fits = fit_noise_ensemble(&truth, &angles, 2e-3, &seeds, &init, &free, Execution::default()).unwrap();
    let n = fits.len() as f64;
    let mean = |f: fn(&DeviceParams) -> f64| fits.iter().map(|x| f(&x.device)).sum::<f64>() / n;
    let spread = |f: fn(&DeviceParams) -> f64, m: f64| {
        (fits.iter().map(|x| (f(&x.device) - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let getters: [(&str, Getter); 3] = [("omega_c0", |d| d.omega_c0), ("j_d", |d| d.j_d), ("j_a", |d| d.j_a)];
    let mut bias = 0.0f64;
    for (name, g) in getters {
        let m = mean(g);
        bias = bias.max((m - g(&truth)).abs());
        r.note(format!(
            "{name}: seed mean {m:.5} eV (truth {:.3}), seed spread {:.2} meV",
            g(&truth),
            spread(g, m) * 1e3
        ));
    }
    let worst = fits.iter().map(|f| dev(&f.device)).fold(0.0, f64::max);
    r.note(format!("worst single-seed parameter error {:.2} meV", worst * 1e3));
    r.check(
        bias <= 5e-3,
        format!(
            "noisy dispersion (sigma 2 meV, {} seeds): max |seed mean - truth| {:.2} meV <= 5 meV",
            seeds.len(),
            bias * 1e3
        ),
    );

    let devices = presets::cavities();
    let rates = presets::rates_default();
    let planted = 5e-3;
    let features =
        sweep_detuning_features(&devices, &rates, planted, 0, &FeatureOptions::default(), Execution::default())
            .unwrap();
    let jt = fit_triplet_coupling(&features, &devices, &rates, (1e-4, 2e-2)).unwrap();
    let rel = (jt.j_t - planted).abs() / planted;
    r.check(rel <= 0.1, format!("J_T fit: {:.4} meV vs planted 5 meV, rel err {rel:.1e} <= 0.1", jt.j_t * 1e3));
    r
}

fn c8_trapezoid() -> Report {
    let mut r = Report::new();
    let lin: Vec<(f64, f64)> = linspace(0.0, 2.0, 7).into_iter().map(|x| (x, 3.0 * x - 1.0)).collect();
    let v = trapezoid_integral(&lin, 0.0, 2.0).unwrap();
    r.check((v - 4.0).abs() <= 1e-12, format!("linear integrand: {v:.15} vs 4 (exact)"));
    let mut errs = Vec::new();
    for n in [10, 100, 1000] {
        let s: Vec<(f64, f64)> = linspace(0.0, 1.0, n + 1).into_iter().map(|x| (x, x * x)).collect();
        let e = (trapezoid_integral(&s, 0.0, 1.0).unwrap() - 1.0 / 3.0).abs();
        let want = 1.0 / (6.0 * (n * n) as f64);
        r.check((e - want).abs() <= 1e-3 * want, format!("x^2 with N={n}: error {e:.4e} vs 1/(6N^2) = {want:.4e}"));
        errs.push(e);
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log10();
        r.check((order - 2.0).abs() <= 1e-2, format!("observed order {order:.4} (want 2)"));
    }
    r
}

type Criterion = (&'static str, &'static str, fn() -> Report);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("C1", "cavity detuning reproduction", c1_cavity_detuning),
        ("C2", "energy-density and capacity arithmetic", c2_arithmetic),
        ("C3", "analytic dynamics oracles", c3_dynamics_oracles),
        ("C4", "mechanism replication", c4_mechanisms),
        ("C5", "resonance location", c5_resonance),
        ("C6", "emission-feature trends at J_T = 5 meV", c6_feature_trends),
        ("C7", "fit round-trips", c7_fit_round_trips),
        ("C8", "trapezoid integration", c8_trapezoid),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        let t0 = Instant::now();
        let rep = f();
        let secs = t0.elapsed().as_secs_f64();
        let red = KNOWN_RED.contains(&id);
        let tag = match (rep.pass, red) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag} {id} {name} [{secs:.1} s]");
        for l in &rep.lines {
            println!("    {l}");
        }
        if !rep.pass && !red {
            unexpected.push(id);
        }
        if rep.pass && red {
            println!("    note: {id} is listed as known-red but passed");
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
