//! Sampled-time correspondence between intelligent controllers and classic
//! PI/PID regulators, and the Routh–Hurwitz gate on the error dynamics
//! `s³ + K_D s² + K_P s + K_I`.
//!
//! The gain maps only hold for the sampled recursions at a fixed period `h`;
//! they diverge as `h → 0` and must not be used to translate tunings between
//! the two families. They exist for the equivalence checks and the
//! `gains check` report.

use serde::{Deserialize, Serialize};

use crate::control::{ControllerKind, ControllerSpec, DerivativeMode, EstimatorKind, GainSet};
use crate::estimation::{ModelOrder, UltraLocalConfig};
use crate::error::Result;
use crate::metrics::{compute_metrics, MetricsConfig};
use crate::plant::PlantSpec;
use crate::scalar::Real;
use crate::scenario::ScenarioSpec;
use crate::signal::{NoiseModel, ReferenceTrajectory, SetpointSegment, TimeGrid};
use crate::simulation::simulate;

/// Gains of a classic regulator `u = k_p e + k_i ∫e + k_d ė`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassicGains<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
}

/// `k_p = −1/(αh)`, `k_i = K_P/(αh)`, `k_d = 0`.
pub fn pi_from_ip<T: Real>(kp: T, alpha: T, h: T) -> ClassicGains<T> {
    let s = T::one() / (alpha * h);
    ClassicGains {
        kp: -s,
        ki: kp * s,
        kd: T::zero(),
    }
}

/// `k_p = K_D/(αh)`, `k_i = K_P/(αh)`, `k_d = −1/(αh)`.
pub fn pid_from_ipd<T: Real>(kp: T, kd: T, alpha: T, h: T) -> ClassicGains<T> {
    let s = T::one() / (alpha * h);
    ClassicGains {
        kp: kd * s,
        ki: kp * s,
        kd: -s,
    }
}

/// One tick of the sampled iP, `u(t) = u(t−h) − (e(t) − e(t−h))/(hα) + K_P e(t)/α`.
pub fn ip_discrete_step<T: Real>(u_prev: T, e: T, e_prev: T, kp: T, alpha: T, h: T) -> T {
    u_prev - (e - e_prev) / (h * alpha) + kp * e / alpha
}

/// One tick of the sampled iPD,
/// `(u(t) − u(t−h))/h = −ë/(αh) + K_P e/(αh) + K_D ė/(αh)` with backward differences.
pub fn ipd_discrete_step<T: Real>(
    u_prev: T,
    e: T,
    e1: T,
    e2: T,
    kp: T,
    kd: T,
    alpha: T,
    h: T,
) -> T {
    let de = (e - e1) / h;
    let dde = (e - T::lit(2.0) * e1 + e2) / (h * h);
    let ah = alpha * h;
    u_prev + h * (-dde / ah + kp * e / ah + kd * de / ah)
}

/// One tick of the sampled PI, `(u(t) − u(t−h))/h = k_p (e(t) − e(t−h))/h + k_i e(t)`.
pub fn pi_velocity_step<T: Real>(gains: &ClassicGains<T>, u_prev: T, e: T, e_prev: T, h: T) -> T {
    u_prev + h * (gains.kp * (e - e_prev) / h + gains.ki * e)
}

/// Routh–Hurwitz verdict on a characteristic polynomial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict<T> {
    pub hurwitz: bool,
    /// Smallest condition value; positive iff every condition holds.
    pub margin: T,
    pub conditions: Vec<(&'static str, T)>,
}

/// Routh–Hurwitz test of `s³ + K_D s² + K_P s + K_I`.
///
/// With `K_I = 0` the root at the origin is factored out and the quadratic
/// `s² + K_D s + K_P` is tested instead. Conditions must hold strictly.
pub fn hurwitz_cubic<T: Real>(kp: T, ki: T, kd: T) -> StabilityVerdict<T> {
    let conditions = if ki == T::zero() {
        vec![("K_D > 0", kd), ("K_P > 0", kp)]
    } else {
        vec![("K_D > 0", kd), ("K_I > 0", ki), ("K_D K_P - K_I > 0", kd * kp - ki)]
    };
    let margin = conditions
        .iter()
        .map(|&(_, v)| v)
        .fold(T::infinity(), |a, b| a.min(b));
    StabilityVerdict {
        hurwitz: conditions.iter().all(|&(_, v)| v > T::zero()),
        margin,
        conditions,
    }
}

/// Settings for the closed-loop half of the Fact-1 demonstration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fact1Options<T> {
    /// Input gain of the double-integrator plant, also used as the model `α`.
    pub alpha: T,
    pub h: T,
    pub window: usize,
    pub horizon: T,
    pub setpoint: T,
    /// Settling band as a fraction of the setpoint step.
    pub band: T,
    pub u_limit: T,
}

impl<T: Real> Default for Fact1Options<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(10.0),
            h: T::lit(0.01),
            window: 30,
            horizon: T::lit(30.0),
            setpoint: T::one(),
            band: T::lit(0.02),
            u_limit: T::lit(1e3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fact1Point<T> {
    pub gains: GainSet<T>,
    pub verdict: StabilityVerdict<T>,
    pub settling_time: Option<T>,
    pub steady_error: Option<T>,
    pub diverged: bool,
}

impl<T: Real> Fact1Point<T> {
    pub fn settled(&self) -> bool {
        self.settling_time.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Fact1Report<T> {
    pub points: Vec<Fact1Point<T>>,
}

impl<T: Real> Fact1Report<T> {
    pub fn stable_count(&self) -> usize {
        self.points.iter().filter(|p| p.verdict.hurwitz).count()
    }

    pub fn settled_count(&self) -> usize {
        self.points.iter().filter(|p| p.settled()).count()
    }
}

/// Step scenario on the exact double integrator `ÿ = αu` driven by an
/// iPID with the given gains, the windowed order-2 estimator and a
/// backward-difference `ė`. (The transformed-output variant lags by about
/// half a window, which on a frictionless plant is enough to destabilise
/// `K_D = 10`.)
pub fn fact1_scenario<T: Real>(gains: GainSet<T>, opts: &Fact1Options<T>) -> Result<ScenarioSpec<T>> {
    let model = UltraLocalConfig::new(ModelOrder::Second, opts.alpha, opts.window, opts.h)?;
    let reference = ReferenceTrajectory::new(
        T::zero(),
        vec![SetpointSegment {
            start: T::zero(),
            value: opts.setpoint,
            transition: T::zero(),
        }],
    )?;
    Ok(ScenarioSpec {
        id: "fact1".into(),
        description: "step response on the double integrator".into(),
        plant: PlantSpec::DoubleIntegrator { gain: opts.alpha },
        reference,
        disturbances: Vec::new(),
        noise: NoiseModel::none(),
        controller: ControllerSpec {
            kind: ControllerKind::IPID,
            gains,
            classic: ClassicGains::default(),
            model,
            derivative: DerivativeMode::BackwardDifference,
            estimator: EstimatorKind::Window,
            u_min: -opts.u_limit,
            u_max: opts.u_limit,
            reset_on_setpoint_change: true,
        },
        grid: TimeGrid::new(opts.h, 10, opts.horizon)?,
        initial_state: vec![T::zero(), T::zero()],
    })
}

/// Checks every `(K_P, K_I)` point with the Routh–Hurwitz gate and by
/// closed-loop simulation on the double integrator.
pub fn demonstrate_fact1<T: Real>(
    grid: &[(T, T)],
    kd: T,
    opts: &Fact1Options<T>,
) -> Result<Fact1Report<T>> {
    let metrics_cfg = MetricsConfig {
        band_fraction: opts.band,
        ..MetricsConfig::default()
    };
    let mut points = Vec::with_capacity(grid.len());
    for &(kp, ki) in grid {
        let gains = GainSet { kp, ki, kd };
        let scenario = fact1_scenario(gains, opts)?;
        let outcome = simulate(&scenario)?;
        let metrics = compute_metrics(&outcome, &scenario, &metrics_cfg);
        let seg = metrics.segments.first();
        points.push(Fact1Point {
            gains,
            verdict: hurwitz_cubic(kp, ki, kd),
            settling_time: if outcome.diverged { None } else { seg.and_then(|s| s.settling_time) },
            steady_error: seg.map(|s| s.steady_error),
            diverged: outcome.diverged,
        });
    }
    Ok(Fact1Report { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;

    fn roots_in_lhp(kp: f64, ki: f64, kd: f64) -> bool {
        let companion = Matrix3::new(-kd, -kp, -ki, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        companion.complex_eigenvalues().iter().all(|z| z.re < 0.0)
    }

    #[test]
    fn pi_map_with_experiment_parameters() {
        let g = pi_from_ip(25.0, 10.0, 0.01);
        assert_relative_eq!(g.kp, -10.0, epsilon = 1e-12);
        assert_relative_eq!(g.ki, 250.0, epsilon = 1e-9);
        assert_eq!(g.kd, 0.0);
        let zero = pi_from_ip(0.0, 10.0, 0.01);
        assert_eq!(zero.ki, 0.0);
        assert_relative_eq!(zero.kp, -10.0, epsilon = 1e-12);
        let half = pi_from_ip(25.0, 10.0, 0.005);
        assert_relative_eq!(half.kp, 2.0 * g.kp, epsilon = 1e-9);
        assert_relative_eq!(half.ki, 2.0 * g.ki, epsilon = 1e-9);
    }

    #[test]
    fn pid_map_with_experiment_parameters() {
        let g = pid_from_ipd(25.0, 10.0, 10.0, 0.01);
        assert_relative_eq!(g.kp, 100.0, epsilon = 1e-9);
        assert_relative_eq!(g.ki, 250.0, epsilon = 1e-9);
        assert_relative_eq!(g.kd, -10.0, epsilon = 1e-12);
        assert_eq!(pid_from_ipd(25.0, 0.0, 10.0, 0.01).kp, 0.0);
        let mut last = 0.0f64;
        for h in [1e-2, 1e-3, 1e-4, 1e-5] {
            let g = pid_from_ipd(25.0f64, 10.0, 10.0, h);
            assert!(g.kp.abs() > last);
            last = g.kp.abs();
        }
    }

    #[test]
    fn hurwitz_examples() {
        let v = hurwitz_cubic(25.0, 0.1, 10.0);
        assert!(v.hurwitz);
        assert!(roots_in_lhp(25.0, 0.1, 10.0));
        assert_relative_eq!(v.margin, 0.1, epsilon = 1e-12);

        for (kp, ki) in [(1.0, 1.0), (25.0, 0.1), (100.0, 3.0)] {
            let v = hurwitz_cubic(kp, ki, 0.0);
            assert!(!v.hurwitz);
            assert!(!roots_in_lhp(kp, ki, 0.0));
        }

        let v = hurwitz_cubic(1.0, 2.0, 1.0);
        assert!(!v.hurwitz);
        assert_relative_eq!(v.margin, -1.0);
        assert!(!roots_in_lhp(1.0, 2.0, 1.0));

        let z = hurwitz_cubic(0.0, 0.0, 0.0);
        assert!(!z.hurwitz);
        assert_eq!(z.margin, 0.0);
    }

    #[test]
    fn quadratic_gate_when_integral_is_off() {
        let v = hurwitz_cubic(25.0, 0.0, 10.0);
        assert!(v.hurwitz);
        assert_eq!(v.conditions.len(), 2);
        assert!(!hurwitz_cubic(25.0, 0.0, 0.0).hurwitz);
    }

    #[test]
    fn sampled_forms_agree() {
        let (kp, kd, alpha, h) = (25.0, 10.0, 10.0, 0.01);
        let g = pid_from_ipd(kp, kd, alpha, h);
        let errs = [0.3, -0.1, 0.05, 0.2, 0.0, -0.4];
        let (mut u_a, mut u_b) = (0.0, 0.0);
        let (mut e1, mut e2) = (0.0, 0.0);
        let mut pid = crate::control::ClassicPidState::primed(g, h, 0.0, 0.0, 0.0);
        for &e in &errs {
            u_a = ipd_discrete_step(u_a, e, e1, e2, kp, kd, alpha, h);
            u_b = pid.step(e);
            e2 = e1;
            e1 = e;
            assert_relative_eq!(u_a, u_b, max_relative = 1e-12);
        }
        let _ = u_b;
    }

    #[test]
    fn empty_grid_gives_empty_report() {
        let r = demonstrate_fact1::<f64>(&[], 0.0, &Fact1Options::default()).unwrap();
        assert!(r.points.is_empty());
    }
}
