use proptest::prelude::*;
use ultralocal::control::ipd_law;
use ultralocal::plant::Rk4;
use ultralocal::scenario::builtin_scenario;
use ultralocal::{compute_metrics, simulate, Controller, ControllerKind, DerivativeMode, MetricsConfig, NoiseModel};

/// ÿ = F + αu with F(t, y) = cos t − 2y and an estimate off by a constant `bias`.
fn biased_loop_final_error(bias: f64, kp: f64, kd: f64) -> f64 {
    let alpha = 10.0;
    let f = |t: f64, y: f64| t.cos() - 2.0 * y;
    let setpoint = 0.4;
    let mut x = [0.0, 0.0];
    let mut rk = Rk4::new(2);
    let dt = 1e-3;
    for k in 0..10_000 {
        rk.step(
            |tt, xx, dx| {
                let u = ipd_law(f(tt, xx[0]) + bias, 0.0, xx[0] - setpoint, xx[1], kp, kd, alpha);
                dx[0] = xx[1];
                dx[1] = f(tt, xx[0]) + alpha * u;
            },
            k as f64 * dt,
            &mut x,
            dt,
        );
    }
    x[0] - setpoint
}

#[test]
fn constant_estimate_bias_forces_offset_over_kp() {
    for (bias, kp, kd) in [(0.5, 25.0, 10.0), (-2.0, 25.0, 10.0), (1.0, 4.0, 4.0)] {
        let e = biased_loop_final_error(bias, kp, kd);
        let want = -bias / kp;
        assert!((e - want).abs() <= 0.01 * want.abs(), "bias {bias}: e = {e}, want {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn command_stays_within_limits(
        kp in 0.0..200.0f64,
        ki in 0.0..50.0f64,
        kd in 0.0..30.0f64,
        limit in 0.1..14.0f64,
        riachy in any::<bool>(),
    ) {
        let mut s = builtin_scenario::<f64>("7").unwrap();
        s.grid.duration = 6.0;
        s.controller.kind = ControllerKind::IPID;
        s.controller.gains.kp = kp;
        s.controller.gains.ki = ki;
        s.controller.gains.kd = kd;
        s.controller.u_min = -limit;
        s.controller.u_max = limit;
        s.controller.derivative = if riachy { DerivativeMode::Riachy } else { DerivativeMode::BackwardDifference };
        let out = simulate(&s).unwrap();
        for r in &out.trace {
            prop_assert!(r.u >= -limit && r.u <= limit, "u = {} outside ±{limit}", r.u);
            prop_assert!(r.u.is_finite());
        }
    }
}

#[test]
fn integral_frozen_while_saturated() {
    let mut spec = builtin_scenario::<f64>("9").unwrap().controller;
    spec.gains.ki = 50.0;
    spec.u_min = -0.01;
    spec.u_max = 0.01;
    let mut c = Controller::new(spec).unwrap();
    let r = ultralocal::signal::RefSample { y: 1.0, dy: 0.0, ddy: 0.0 };
    for k in 0..200 {
        let s = c.step(k as f64 * 0.01, 0.0, r, false).unwrap();
        if !s.warming_up {
            assert!(s.saturated);
        }
    }
    assert_eq!(c.integral(), 0.0);
}

#[test]
fn identical_spec_and_seed_give_identical_traces_and_metrics() {
    let mut s = builtin_scenario::<f64>("6").unwrap();
    s.noise = NoiseModel { std: 0.003, ..NoiseModel::encoder(17) };
    let (a, b) = (simulate(&s).unwrap(), simulate(&s).unwrap());
    assert_eq!(a, b);
    let cfg = MetricsConfig::default();
    let (ma, mb) = (compute_metrics(&a, &s, &cfg), compute_metrics(&b, &s, &cfg));
    assert_eq!(format!("{ma:?}"), format!("{mb:?}"));
}

#[test]
fn controller_sees_only_the_measurement() {
    let mut s = builtin_scenario::<f64>("4").unwrap();
    s.noise = NoiseModel { quantization: 0.01, std: 0.005, seed: 3 };
    let out = simulate(&s).unwrap();
    assert!(out.trace.iter().any(|r| r.y_true != r.y_measured));
    for r in &out.trace {
        assert_eq!(r.e, r.y_measured - r.y_ref);
    }
}

#[test]
fn single_precision_run_tracks_double_precision() {
    let s64 = builtin_scenario::<f64>("4").unwrap();
    let s32 = builtin_scenario::<f32>("4").unwrap();
    let cfg64 = MetricsConfig::default();
    let m64 = compute_metrics(&simulate(&s64).unwrap(), &s64, &cfg64);
    let m32 = compute_metrics(&simulate(&s32).unwrap(), &s32, &MetricsConfig::default());
    assert!(!m32.diverged);
    assert!((m32.rmse as f64 - m64.rmse).abs() < 0.1 * m64.rmse, "{} vs {}", m32.rmse, m64.rmse);
}

#[test]
fn hurwitz_gate_agrees_with_roots_for_mixed_signs() {
    use nalgebra::Matrix3;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for _ in 0..2000 {
        let (kp, ki, kd): (f64, f64, f64) =
            (rng.random_range(-20.0..50.0), rng.random_range(-20.0..100.0), rng.random_range(-10.0..20.0));
        let v = ultralocal::hurwitz_cubic(kp, ki, kd);
        if v.margin.abs() < 1e-9 {
            continue;
        }
        let companion = Matrix3::new(-kd, -kp, -ki, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let lhp = companion.complex_eigenvalues().iter().all(|z| z.re < 0.0);
        assert_eq!(v.hurwitz, lhp, "({kp}, {ki}, {kd})");
    }
}
