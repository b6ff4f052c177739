mod common;

use common::*;
use decaylab_core::dynamics::{
    compute_g, compute_s, evolve, tensor_divergence, time_derivative_norms, H3Monitor, NormRecorder, Schedule,
    Stepper,
};
use decaylab_core::linear::{evolve_linear_on_grid, LinearState};
use decaylab_core::spectral::ops::{divergence, gradient, laplacian};
use decaylab_core::spectral::sample;
use decaylab_core::{Error, GridSpec, PhysParams, SpectralField, SpectralVectorField, State};
use std::f64::consts::PI;

fn grid16() -> GridSpec {
    GridSpec::new(16, 2.0 * PI).unwrap()
}

/// `B = (0, cos x1, sin x1)`: one complex Fourier mode, force free, `curl B = -B`.
fn beltrami(grid: GridSpec, amp: f64) -> SpectralVectorField {
    SpectralVectorField::from_fn(grid, |x| [0.0, amp * x[0].cos(), amp * x[0].sin()])
}

fn state_from(varrho: SpectralField, u: SpectralVectorField, b: SpectralVectorField) -> State {
    State::new(varrho, u, b, 0.0).unwrap()
}

#[test]
fn zero_state_has_zero_sources() {
    let s = State::zeros(grid16());
    let g = compute_g(&s, &PhysParams::default()).unwrap();
    assert_eq!(g.g1.max_abs_coeff(), 0.0);
    assert_eq!(g.g2.max_abs_coeff(), 0.0);
    assert_eq!(g.g3.max_abs_coeff(), 0.0);
}

#[test]
fn quadratic_pressure_drops_correction_term() {
    let g = grid16();
    let mut r = rng(3);
    let varrho = smooth_field(g, 2, 0.05, &mut r);
    let s = state_from(varrho, SpectralVectorField::zeros(g), SpectralVectorField::zeros(g));
    let quadratic = PhysParams {
        pressure_gamma: 2.0,
        ..Default::default()
    };
    // with u = 0 and B = 0 the pressure correction is the only G2 term
    assert_eq!(compute_g(&s, &quadratic).unwrap().g2.max_abs_coeff(), 0.0);
    assert!(compute_g(&s, &PhysParams::default()).unwrap().g2.max_abs_coeff() > 1e-5);
}

#[test]
fn shear_flow_in_transverse_field() {
    // varrho = 0, u = (sin x2, 0, 0), B = (0, 0, sin x1)
    let g = grid16();
    let u = SpectralVectorField::from_fn(g, |x| [x[1].sin(), 0.0, 0.0]);
    let b = SpectralVectorField::from_fn(g, |x| [0.0, 0.0, x[0].sin()]);
    let s = state_from(SpectralField::zeros(g), u, b);
    let out = compute_g(&s, &PhysParams::default()).unwrap();
    assert!(out.g1.max_abs_coeff() < 1e-15);
    // the Lorentz force (curl B) x B = -(sin x1 cos x1, 0, 0) is a gradient but not zero
    let g2 = out.g2.to_physical();
    let lorentz = sample(g, |x| -x[0].sin() * x[0].cos());
    assert!(max_abs_diff(&g2[0], &lorentz) < 1e-13);
    assert!(max_abs(&g2[1]) < 1e-13 && max_abs(&g2[2]) < 1e-13);
    let g3 = out.g3.to_physical();
    let expect = sample(g, |x| -x[0].cos() * x[1].sin());
    assert!(max_abs(&g3[0]) < 1e-13 && max_abs(&g3[1]) < 1e-13);
    assert!(max_abs_diff(&g3[2], &expect) < 1e-13);
    assert!(out.g3.divergence_residual() < 1e-13);
}

#[test]
fn flux_examples() {
    let g = grid16();
    let u = SpectralVectorField::from_fn(g, |_| [0.3, -0.2, 0.5]);
    let s = state_from(SpectralField::zeros(g), u, SpectralVectorField::zeros(g));
    let f = compute_s(&s, &PhysParams::default()).unwrap();
    let uc = [0.3, -0.2, 0.5];
    for i in 0..3 {
        for j in 0..3 {
            let v = f.s1[i][j].to_physical();
            assert!(v.iter().all(|x| (x - uc[i] * uc[j]).abs() < 1e-15));
        }
    }
    assert!(f.s2.max_abs_coeff() < 1e-16);

    let rho0 = 0.01;
    let s = state_from(
        SpectralField::from_fn(g, |_| rho0),
        SpectralVectorField::zeros(g),
        SpectralVectorField::zeros(g),
    );
    let quad = PhysParams {
        pressure_gamma: 2.0,
        ..Default::default()
    };
    let f = compute_s(&s, &quad).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { 0.5 * rho0 * rho0 } else { 0.0 };
            assert!(f.s1[i][j].to_physical().iter().all(|x| (x - expect).abs() < 1e-17));
        }
    }
}

#[test]
fn conservative_and_velocity_forms_agree() {
    let g = GridSpec::new(32, 2.0 * PI).unwrap();
    let params = PhysParams {
        nu: 0.3,
        ..Default::default()
    };
    let s = smooth_state(g, 0.02, 11);
    // u-form right-hand side
    let gsrc = compute_g(&s, &params).unwrap();
    let lam = params.mu + params.nu;
    let div_u = divergence(&s.u);
    let u_t: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            let lin = &(&laplacian(s.u.component(i)).scale(params.mu) + &gradient(&div_u).component(i).scale(lam))
                - gradient(&s.varrho).component(i);
            (&lin + gsrc.g2.component(i)).to_physical()
        })
        .collect();
    // conservative form: m_t = mu lap m + (mu + nu) grad div m - grad varrho - div S1
    let m = s.momentum();
    let flux = compute_s(&s, &params).unwrap();
    let div_s1 = tensor_divergence(&flux.s1);
    let div_m = divergence(&m);
    let rho_t = (&div_m.scale(-1.0)).to_physical();
    let rho = s.varrho.to_physical();
    let uu = s.u.to_physical();
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..3 {
        let m_t = (&(&(&laplacian(m.component(i)).scale(params.mu) + &gradient(&div_m).component(i).scale(lam))
            - gradient(&s.varrho).component(i))
            - div_s1.component(i))
            .to_physical();
        for p in 0..g.physical_len() {
            let from_s = (m_t[p] - rho_t[p] * uu[i][p]) / (1.0 + rho[p]);
            err = err.max((from_s - u_t[i][p]).abs());
            scale = scale.max(u_t[i][p].abs());
        }
    }
    assert!(err < 1e-6 * scale, "relative mismatch {}", err / scale);
}

#[test]
fn flux_divergence_matches_finite_differences() {
    let g = GridSpec::new(32, 2.0 * PI).unwrap();
    let params = PhysParams {
        nu: 0.2,
        ..Default::default()
    };
    let (a, b, c) = (0.02, 0.015, 0.01);
    let rho = move |x: [f64; 3]| a * x[0].sin() * x[1].cos();
    let drho = move |x: [f64; 3]| [a * x[0].cos() * x[1].cos(), -a * x[0].sin() * x[1].sin(), 0.0];
    let u = move |x: [f64; 3]| [b * x[1].sin(), b * x[2].sin() * x[0].cos(), b * x[0].sin()];
    // du[i][j] = d_i u_j
    let du = move |x: [f64; 3]| {
        [
            [0.0, -b * x[2].sin() * x[0].sin(), b * x[0].cos()],
            [b * x[1].cos(), 0.0, 0.0],
            [0.0, b * x[2].cos() * x[0].cos(), 0.0],
        ]
    };
    let bf = move |x: [f64; 3]| [c * x[1].sin(), c * x[2].sin(), c * x[0].sin()];
    let s1 = move |x: [f64; 3], i: usize, j: usize| {
        let r = rho(x);
        let uv = u(x);
        let bv = bf(x);
        let dr = drho(x);
        let d = du(x);
        let dq = |k: usize, l: usize| dr[k] * uv[l] + r * d[k][l];
        let divq = dq(0, 0) + dq(1, 1) + dq(2, 2);
        let mut v = (1.0 + r) * uv[i] * uv[j] + params.mu * dq(i, j) - bv[i] * bv[j];
        if i == j {
            v += (params.mu + params.nu) * divq
                + params.pressure_remainder(r)
                + 0.5 * (bv[0] * bv[0] + bv[1] * bv[1] + bv[2] * bv[2]);
        }
        v
    };
    let state = state_from(
        SpectralField::from_fn(g, rho),
        SpectralVectorField::from_fn(g, u),
        SpectralVectorField::from_fn(g, bf),
    );
    let div_s = tensor_divergence(&compute_s(&state, &params).unwrap().s1).to_physical();
    let h = 1e-3;
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &(i1, i2, i3) in &[(0, 0, 0), (3, 7, 11), (15, 2, 9), (21, 30, 5), (8, 16, 24)] {
        let x = [g.coordinate(i1), g.coordinate(i2), g.coordinate(i3)];
        let p = g.physical_index(i1, i2, i3);
        for j in 0..3 {
            let mut fd = 0.0;
            for i in 0..3 {
                let at = |o: f64| {
                    let mut y = x;
                    y[i] += o;
                    s1(y, i, j)
                };
                fd += (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
            }
            err = err.max((fd - div_s[j][p]).abs());
            scale = scale.max(fd.abs());
        }
    }
    assert!(err < 1e-6 * scale, "relative error {}", err / scale);
}

#[test]
fn force_free_mode_decays_exactly() {
    let g = grid16();
    let q2: f64 = 1.0;
    let b = beltrami(g, 0.1);
    let s = state_from(SpectralField::zeros(g), SpectralVectorField::zeros(g), b.clone());
    let dt = 0.1;
    let next = Stepper::new(g, &PhysParams::default(), dt).unwrap().step(&s).unwrap();
    let expect = b.scale((-q2 * dt).exp());
    assert!((&next.b - &expect).max_abs_coeff() < 1e-16);
    assert!(next.u.max_abs_coeff() < 1e-18);
}

fn state_distance(a: &State, b: &State) -> f64 {
    ((&a.varrho - &b.varrho).l2_norm_squared() + (&a.u - &b.u).l2_norm_squared() + (&a.b - &b.b).l2_norm_squared())
        .sqrt()
}

#[test]
fn local_error_is_third_order() {
    let g = grid16();
    let params = PhysParams::default();
    let s = smooth_state(g, 0.1, 5);
    let defect = |dt: f64| {
        let one = Stepper::new(g, &params, dt).unwrap().step(&s).unwrap();
        let half = Stepper::new(g, &params, dt / 2.0).unwrap();
        let two = half.step(&half.step(&s).unwrap()).unwrap();
        state_distance(&one, &two)
    };
    // stiff high modes reduce the order until |k|^2 dt is well below one
    let (e1, e2) = (defect(0.004), defect(0.002));
    let order = (e1 / e2).log2();
    assert!(order >= 2.7, "measured order {order}");
}

#[test]
fn magnetic_free_run_matches_navier_stokes() {
    let g = grid16();
    let params = PhysParams::default();
    let mut s = smooth_state(g, 0.05, 8);
    s.b = SpectralVectorField::zeros(g);
    let stepper = Stepper::new(g, &params, 0.05).unwrap();
    let no_hall = PhysParams {
        hall_enabled: false,
        ..params
    };
    let mhd = Stepper::new(g, &no_hall, 0.05).unwrap();
    let (mut r, mut u) = (s.varrho.clone(), s.u.clone());
    let mut s2 = s.clone();
    for k in 0..100 {
        s = stepper.step(&s).unwrap();
        s2 = mhd.step(&s2).unwrap();
        let (r1, u1) = stepper.step_navier_stokes(&r, &u, k as f64 * 0.05).unwrap();
        r = r1;
        u = u1;
    }
    assert!((&s.varrho - &r).max_abs_coeff() < 1e-12);
    assert!((&s.u - &u).max_abs_coeff() < 1e-12);
    assert_eq!(s.b.max_abs_coeff(), 0.0);
    assert_eq!(s, s2);
}

#[test]
fn mass_and_solenoidality_preserved() {
    let g = grid16();
    let mut s = smooth_state(g, 0.05, 21);
    let shift = SpectralField::from_fn(g, |_| 0.01);
    s.varrho = &s.varrho + &shift;
    let mean0 = s.varrho.mean();
    let stepper = Stepper::new(g, &PhysParams::default(), 0.05).unwrap();
    for _ in 0..100 {
        s = stepper.step(&s).unwrap();
        assert!(s.b.divergence_residual() < 1e-10);
    }
    assert!((s.varrho.mean() - mean0).abs() < 1e-10 * mean0.abs());
}

fn linear_distance(a: &LinearState, b: &LinearState) -> f64 {
    ((&a.varrho - &b.varrho).l2_norm_squared() + (&a.m - &b.m).l2_norm_squared() + (&a.b - &b.b).l2_norm_squared())
        .sqrt()
}

#[test]
fn small_amplitude_runs_follow_the_linear_semigroup() {
    let g = grid16();
    let params = PhysParams::default();
    let run = |amp: f64| {
        let s0 = smooth_state(g, amp, 31);
        let lin0 = s0.to_linear();
        let stepper = Stepper::new(g, &params, 0.05).unwrap();
        let end = evolve(s0, &stepper, 2.0, &Schedule::EverySteps(10), &mut []).unwrap();
        let lin = evolve_linear_on_grid(&lin0, &params, 2.0).unwrap();
        (end, lin)
    };
    let (end, lin) = run(1e-6);
    assert!((end.b.l2_norm() / lin.b.l2_norm() - 1.0).abs() < 1e-4);
    let (e3, l3) = run(1e-3);
    let (e4, l4) = run(1e-4);
    let ratio = linear_distance(&e3.to_linear(), &l3) / linear_distance(&e4.to_linear(), &l4);
    assert!(ratio > 100.0 / 3.0 && ratio < 300.0, "ratio {ratio}");
}

#[test]
fn time_derivative_examples() {
    let g = grid16();
    let b = beltrami(g, 0.2);
    let s = state_from(SpectralField::zeros(g), SpectralVectorField::zeros(g), b.clone());
    let n = time_derivative_norms(&s, &PhysParams::default(), None).unwrap();
    assert!((n.b_t - b.l2_norm()).abs() < 1e-14);

    let u = SpectralVectorField::from_fn(g, |x| [x[1].sin(), x[2].cos(), 0.0]);
    let s = state_from(SpectralField::zeros(g), u, SpectralVectorField::zeros(g));
    let n = time_derivative_norms(&s, &PhysParams::default(), Some(1.0)).unwrap();
    assert!(n.rho_t < 1e-15 && n.div_u < 1e-15);
    assert!(n.weighted.unwrap()[0] < 1e-14);
}

#[test]
fn small_data_stay_bounded_in_h3() {
    let g = grid16();
    let s = smooth_state(g, 1e-2, 2);
    let stepper = Stepper::new(g, &PhysParams::default(), 0.05).unwrap();
    let mut mon = H3Monitor::default();
    let mut rec = NormRecorder::basic();
    evolve(s, &stepper, 5.0, &Schedule::EverySteps(5), &mut [&mut mon, &mut rec]).unwrap();
    assert!(mon.ratio() <= 2.0);
    let series = rec.series();
    assert_eq!(series.rows.len(), 21);
    assert!((series.times().last().unwrap() - 5.0).abs() < 1e-12);
}

#[test]
fn zero_state_evolves_to_zero() {
    let g = grid16();
    let stepper = Stepper::new(g, &PhysParams::default(), 0.1).unwrap();
    let mut rec = NormRecorder::basic();
    let end = evolve(State::zeros(g), &stepper, 1.05, &Schedule::EverySteps(1), &mut [&mut rec]).unwrap();
    assert_eq!(end.t, 1.05);
    assert_eq!(end.varrho.max_abs_coeff() + end.u.max_abs_coeff() + end.b.max_abs_coeff(), 0.0);
    assert!(rec.series().rows.iter().all(|r| r[1..].iter().all(|&v| v == 0.0)));
}

#[test]
fn guards_report_failures() {
    let g = grid16();
    let deep = SpectralField::from_fn(g, |x| -0.9995 + 1e-4 * x[0].cos());
    let s = state_from(deep, SpectralVectorField::zeros(g), SpectralVectorField::zeros(g));
    assert!(matches!(compute_g(&s, &PhysParams::default()), Err(Error::Vacuum { .. })));

    let fast = SpectralVectorField::from_fn(g, |x| [10.0 * x[1].sin(), 0.0, 0.0]);
    let s = state_from(SpectralField::zeros(g), fast, SpectralVectorField::zeros(g));
    let stepper = Stepper::new(g, &PhysParams::default(), 1.0).unwrap();
    assert!(matches!(stepper.step(&s), Err(Error::Cfl { .. })));

    let mut bad = SpectralField::zeros(g);
    bad.coeffs_mut()[5] = num_complex::Complex64::new(f64::NAN, 0.0);
    let s = state_from(bad, SpectralVectorField::zeros(g), SpectralVectorField::zeros(g));
    match stepper.step(&s) {
        Err(Error::Divergence { field, .. }) => assert_eq!(field, "varrho"),
        other => panic!("expected divergence error, got {other:?}"),
    }
}
