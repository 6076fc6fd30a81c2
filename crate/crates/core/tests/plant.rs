use ultralocal::plant::{aero_derivative, hold_and_integrate, mix_voltages, Rk4, AERO_VOLTAGE_LIMIT};
use ultralocal::{AeroSurrogate, AeroSurrogateParams, DoubleIntegrator, Plant};

fn free_swing(params: AeroSurrogateParams<f64>, x0: [f64; 2], t_end: f64, dt: f64) -> [f64; 2] {
    let mut x = x0;
    let mut rk = Rk4::new(2);
    let cmd = mix_voltages(0.0);
    let n = (t_end / dt).round() as usize;
    for k in 0..n {
        rk.step(
            |_, xx, dx| {
                let d = aero_derivative(&params, [xx[0], xx[1]], &cmd, 0.0);
                dx.copy_from_slice(&d);
            },
            k as f64 * dt,
            &mut x,
            dt,
        );
    }
    x
}

#[test]
fn rk4_global_error_is_fourth_order() {
    let params = AeroSurrogateParams::default();
    let x0 = [1.2, 0.0];
    let reference = free_swing(params, x0, 1.0, 1e-4);
    let steps = [0.02, 0.01, 0.005, 0.0025];
    let errs: Vec<f64> = steps.iter().map(|&dt| (free_swing(params, x0, 1.0, dt)[0] - reference[0]).abs()).collect();
    for w in errs.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!(slope >= 3.8, "observed order {slope:.2} from {errs:?}");
    }
}

#[test]
fn frictionless_swing_conserves_energy() {
    let params = AeroSurrogateParams { friction: 0.0, ..Default::default() };
    let energy = |x: [f64; 2]| 0.5 * params.inertia * x[1] * x[1] - params.gravity * x[0].cos();
    let x0 = [0.8, 0.5];
    let e0 = energy(x0);
    let x = free_swing(params, x0, 10.0, 1e-3);
    let drift = ((energy(x) - e0) / e0).abs();
    assert!(drift < 1e-6, "relative energy drift {drift:.3e}");
}

#[test]
fn double_integrator_is_exact_under_hold() {
    let plant = DoubleIntegrator { gain: 10.0 };
    let mut rk = Rk4::new(2);
    let mut x: Vec<f64> = vec![0.1, -0.2];
    let cmd = plant.actuate(0.3);
    hold_and_integrate(&plant, &mut rk, &mut x, &cmd, &[], 0.0, 0.01, 10);
    let h: f64 = 0.01;
    assert!((x[0] - (0.1 - 0.2 * h + 0.5 * 3.0 * h * h)).abs() < 1e-15);
    assert!((x[1] - (-0.2 + 3.0 * h)).abs() < 1e-15);
}

#[test]
fn voltages_always_within_limits() {
    let plant = AeroSurrogate::<f64>::default();
    for k in -400..=400 {
        let cmd = plant.actuate(k as f64 * 0.1);
        assert!(cmd.v1.abs() <= AERO_VOLTAGE_LIMIT && cmd.v2.abs() <= AERO_VOLTAGE_LIMIT);
    }
}
