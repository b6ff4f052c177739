//! Acceptance suite. One test per criterion; each prints a single
//! `PASS`/`FAIL` line with the measured values before asserting.
//!
//! Tests hold a global lock while they compute so that the wall-clock budgets
//! are measured without contention. The 64^3 grid run is shared by four
//! criteria and computed once.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use decaylab_core::experiments::{
    eta_shift, linear_rates, nonlinear_run, ode_lemma, order_rate, property_suite, reductions_suite,
    LinearRatesConfig, NonlinearOutcome, NonlinearRunConfig,
};
use decaylab_core::initdata::{DataKind, SpectralCondition};
use decaylab_core::rates::{bracket_constants, fit_decay_exponent, DecaySeries, WindowPolicy};
use decaylab_core::{GridSpec, PhysParams};

const LINEAR_MAGNETIC_TOL: f64 = 0.03;
const LINEAR_FLUID_TOL: f64 = 0.05;
const LINEAR_BRACKET_LIMIT: f64 = 10.0;
const LINEAR_DT_B_TOL: f64 = 0.25;
const ETA_SHIFT_SLACK: f64 = 0.1;
const SPLITTING_FLOOR: f64 = -1e-10;
const NONLINEAR_B_TOL: f64 = 0.15;
const NONLINEAR_GRAD_B_TOL: f64 = 0.2;
const NONLINEAR_RHO_TOL: f64 = 0.2;
const DIFFERENCE_GAP: f64 = 0.3;
const GRID_DERIVATIVE_TOL: f64 = 0.3;
const WEIGHTED_TOL: f64 = 0.25;
const WEIGHTED_BRACKET_LIMIT: f64 = 20.0;
const ODE_PLATEAU: f64 = 0.1;
const REDUCTION_TOL: f64 = 1e-12;

const LINEAR_BUDGET: Duration = Duration::from_secs(30);
const PROPERTY_BUDGET: Duration = Duration::from_secs(60);
const GRID_BUDGET: Duration = Duration::from_secs(3600);
const ODE_BUDGET: Duration = Duration::from_secs(10);

static SERIAL: Mutex<()> = Mutex::new(());
static GRID_RUN: OnceLock<NonlinearOutcome> = OnceLock::new();

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(name: &str, ok: bool, detail: &str) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn grid_run() -> &'static NonlinearOutcome {
    GRID_RUN.get_or_init(|| {
        let cfg = NonlinearRunConfig::acceptance();
        assert_eq!((cfg.n, cfg.t_end, cfg.fit_t_min, cfg.fit_t_max), (64, 200.0, 10.0, 200.0));
        assert!((cfg.box_length - 32.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(cfg.condition.amplitude, 1e-2);
        nonlinear_run(&cfg).expect("grid run")
    })
}

fn grid_fit(o: &NonlinearOutcome, column: &str, envelope: bool) -> f64 {
    let v = o.series.column(column).expect(column);
    let s = DecaySeries::from_samples(column, &o.series.times(), &v).unwrap();
    fit_decay_exponent(&s, &o.config.policy(envelope)).map(|f| f.alpha).unwrap_or(f64::NAN)
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

#[test]
fn linear_rates_quadrature() {
    let _g = serial();
    let start = Instant::now();
    let out = linear_rates(&LinearRatesConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let mut ok = elapsed < LINEAR_BUDGET;
    let mut parts = Vec::new();
    for k in 0..=3u32 {
        let a = out.rows.iter().find(|r| r.label == format!("grad{k}_B_lin")).unwrap().alpha.unwrap_or(f64::NAN);
        ok &= within(a, order_rate(k), LINEAR_MAGNETIC_TOL);
        parts.push(format!("B k={k} {a:.4}/{:.2}", order_rate(k)));
    }
    for k in 0..=1u32 {
        let a = out.rows.iter().find(|r| r.label == format!("grad{k}_rho_m_lin")).unwrap().alpha.unwrap_or(f64::NAN);
        ok &= within(a, order_rate(k), LINEAR_FLUID_TOL);
        parts.push(format!("(rho,m) k={k} {a:.4}/{:.2}", order_rate(k)));
    }
    report("linear_rates", ok, &format!("{}; {:.1}s", parts.join(", "), elapsed.as_secs_f64()));
    assert!(ok);
}

#[test]
fn linear_two_sided_bracket() {
    let _g = serial();
    let start = Instant::now();
    let out = linear_rates(&LinearRatesConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let mut ok = elapsed < LINEAR_BUDGET;
    let mut parts = Vec::new();
    let labels: Vec<(String, u32, bool)> = (0..=3)
        .map(|k| (format!("grad{k}_B_lin"), k, false))
        .chain((0..=1).map(|k| (format!("grad{k}_rho_m_lin"), k, true)))
        .collect();
    for (label, k, envelope) in labels {
        let v = out.series.column(&label).expect(&label);
        let s = DecaySeries::from_samples(&label, &out.series.times(), &v).unwrap();
        let policy = if envelope {
            WindowPolicy::envelope(1e2, 1e4)
        } else {
            WindowPolicy::plain(1e2, 1e4)
        };
        let (lo, hi) = bracket_constants(&s, order_rate(k), &policy).unwrap();
        let ratio = hi / lo;
        ok &= lo > 0.0 && ratio < LINEAR_BRACKET_LIMIT;
        parts.push(format!("{label} C/c={ratio:.3}"));
    }
    report("linear_bracket", ok, &parts.join(", "));
    assert!(ok);
}

#[test]
fn eta_shift_rate() {
    let _g = serial();
    let start = Instant::now();
    let row = eta_shift(1.0, 1.0, &PhysParams::default(), 1e2, 1e4, ETA_SHIFT_SLACK).unwrap();
    let elapsed = start.elapsed();
    let a = row.alpha.unwrap_or(f64::NAN);
    let floor = 0.75 + 0.5 - ETA_SHIFT_SLACK;
    let ok = a >= floor && elapsed < LINEAR_BUDGET;
    report("eta_shift", ok, &format!("alpha {a:.4} >= {floor:.2}; {:.1}s", elapsed.as_secs_f64()));
    assert!(ok);
}

#[test]
fn property_suite_exact() {
    let _g = serial();
    let start = Instant::now();
    let checks = property_suite(32, 20240607).unwrap();
    let elapsed = start.elapsed();
    let expected = [
        "parseval",
        "round_trip",
        "div_curl_identity",
        "leray_idempotence",
        "fourier_splitting_slack",
        "weighted_interpolation",
        "holder_bridge",
        "mass_conservation",
        "solenoidality",
    ];
    let mut ok = elapsed < PROPERTY_BUDGET;
    for name in expected {
        ok &= checks.iter().any(|c| c.name == name && c.passed);
    }
    let slack = checks.iter().find(|c| c.name == "fourier_splitting_slack").unwrap();
    ok &= slack.value >= SPLITTING_FLOOR;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    report(
        "property_suite",
        ok,
        &format!("{} checks, failed {failed:?}; {:.1}s", checks.len(), elapsed.as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn nonlinear_decay_grid() {
    let _g = serial();
    let o = grid_run();
    let cond: serde_json::Value = serde_json::from_str(&o.condition_report).unwrap();
    let lower_bound = cond["passed"].as_bool() == Some(true);
    let b = grid_fit(o, "b_l2", false);
    let gb = grid_fit(o, "grad_b_l2", false);
    let rho = grid_fit(o, "rho_l2", true);
    let ok = o.failure.is_none()
        && lower_bound
        && within(b, 0.75, NONLINEAR_B_TOL)
        && within(gb, 1.25, NONLINEAR_GRAD_B_TOL)
        && within(rho, 0.75, NONLINEAR_RHO_TOL)
        && o.runtime_seconds < GRID_BUDGET.as_secs_f64();
    report(
        "nonlinear_decay",
        ok,
        &format!(
            "B {b:.4}, grad B {gb:.4}, rho {rho:.4}, data conditions {lower_bound}; {:.0}s",
            o.runtime_seconds
        ),
    );
    assert!(ok);
}

#[test]
fn difference_rate_separation() {
    let _g = serial();
    let o = grid_run();
    let gap = |full: &str, delta: &str, envelope: bool| grid_fit(o, delta, envelope) - grid_fit(o, full, envelope);
    let gb = gap("b_l2", "b_delta_l2", false);
    let gf = gap("rho_m_l2", "rho_m_delta_l2", false);
    let ok = gb >= DIFFERENCE_GAP && gf >= DIFFERENCE_GAP;
    report("difference_separation", ok, &format!("B gap {gb:.4}, (rho,m) gap {gf:.4}"));
    assert!(ok);
}

#[test]
fn time_derivative_rates() {
    let _g = serial();
    let start = Instant::now();
    let lin = linear_rates(&LinearRatesConfig {
        magnetic_orders: vec![],
        fluid_orders: vec![],
        ..LinearRatesConfig::default()
    })
    .unwrap();
    let lin_elapsed = start.elapsed();
    let dt_lin = lin.rows.iter().find(|r| r.label == "dt_B_lin").unwrap().alpha.unwrap_or(f64::NAN);
    let o = grid_run();
    let u0_zero = o.config.kind == DataKind::Localized;
    let dt_b = grid_fit(o, "dt_b_l2", true);
    let dt_rho = grid_fit(o, "dt_rho_l2", true);
    let div_u = grid_fit(o, "div_u_l2", true);
    let ok = within(dt_lin, 1.75, LINEAR_DT_B_TOL)
        && lin_elapsed < LINEAR_BUDGET
        && u0_zero
        && within(dt_b, 1.75, GRID_DERIVATIVE_TOL)
        && within(dt_rho, 1.25, GRID_DERIVATIVE_TOL)
        && within(div_u, 1.25, GRID_DERIVATIVE_TOL);
    report(
        "time_derivative_rates",
        ok,
        &format!("dt B linear {dt_lin:.4}, dt B grid {dt_b:.4}, dt rho {dt_rho:.4}, div u {div_u:.4}"),
    );
    assert!(ok);
}

#[test]
fn weighted_decay() {
    let _g = serial();
    let o = grid_run();
    let mut ok = true;
    let mut parts = Vec::new();
    for gamma in [0.5, 1.0] {
        let column = format!("b_w{gamma}_l2");
        let theory = 0.75 - gamma / 2.0;
        let a = grid_fit(o, &column, false);
        let v = o.series.column(&column).expect(&column);
        let s = DecaySeries::from_samples(&column, &o.series.times(), &v).unwrap();
        let (lo, hi) = bracket_constants(&s, theory, &o.config.policy(false)).unwrap();
        let ratio = hi / lo;
        ok &= within(a, theory, WEIGHTED_TOL) && lo > 0.0 && ratio < WEIGHTED_BRACKET_LIMIT;
        parts.push(format!("gamma {gamma}: alpha {a:.4}/{theory:.2}, C/c {ratio:.3}"));
    }
    report("weighted_decay", ok, &parts.join("; "));
    assert!(ok);
}

#[test]
fn comparison_ode_plateau() {
    let _g = serial();
    let start = Instant::now();
    let t_end = 1e6;
    let r = ode_lemma(2.0, t_end).unwrap();
    let elapsed = start.elapsed();
    let tail: Vec<f64> = r
        .samples
        .iter()
        .filter(|p| p[0] >= t_end / 2.0)
        .map(|p| p[1] / p[0].powf(2.5))
        .collect();
    let (lo, hi) = tail.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    let spread = 1.0 - lo / hi;
    let ok = (r.gamma1 - 2.5).abs() < 1e-12
        && r.blow_up.is_none()
        && tail.len() >= 2
        && spread <= ODE_PLATEAU
        && elapsed < ODE_BUDGET;
    report(
        "comparison_ode",
        ok,
        &format!("F/t^2.5 spread {spread:.2e} over {} tail samples; {:.2}s", tail.len(), elapsed.as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn reductions() {
    let _g = serial();
    let start = Instant::now();
    let checks = reductions_suite(32, 20240607).unwrap();
    let elapsed = start.elapsed();
    let ns = checks.iter().find(|c| c.name == "navier_stokes_reduction").unwrap();
    let ok = ns.value <= REDUCTION_TOL
        && checks.iter().all(|c| c.passed)
        && ["hall_toggle_noop", "pressure_correction_gamma2"]
            .iter()
            .all(|n| checks.iter().any(|c| c.name == *n))
        && elapsed < PROPERTY_BUDGET;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    report(
        "reductions",
        ok,
        &format!("NS gap {:.2e}, failed {failed:?}; {:.1}s", ns.value, elapsed.as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn acceptance_configuration_is_admissible() {
    let cfg = NonlinearRunConfig::acceptance();
    let grid = GridSpec::new(cfg.n, cfg.box_length).unwrap();
    let c: &SpectralCondition = &cfg.condition;
    assert!(c.validate(grid).is_ok());
    assert!(cfg.params.validate().is_ok());
}
