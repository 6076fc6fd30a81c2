//! Continuous plants for the simulation bench and a fixed-step RK4 integrator.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Motor voltages after mixing and clamping.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuatorCommand<T> {
    pub v1: T,
    pub v2: T,
}

/// A torque bias applied over `[start, start + duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceEvent<T> {
    pub start: T,
    pub duration: T,
    pub torque: T,
}

impl<T: Real> DisturbanceEvent<T> {
    pub fn validate(&self) -> Result<()> {
        if self.start < T::zero() || !(self.duration > T::zero()) {
            return Err(invalid("disturbance needs start >= 0 and duration > 0"));
        }
        Ok(())
    }

    pub fn end(&self) -> T {
        self.start + self.duration
    }

    pub fn active(&self, t: T) -> bool {
        t >= self.start && t < self.end()
    }
}

/// Sum of the torques of every event active at `t`.
pub fn disturbance_at<T: Real>(events: &[DisturbanceEvent<T>], t: T) -> T {
    events
        .iter()
        .filter(|d| d.active(t))
        .map(|d| d.torque)
        .fold(T::zero(), |a, b| a + b)
}

/// Continuous plant seen through a zero-order hold.
///
/// The controller never sees the state; it only receives the (corrupted)
/// output of [`Plant::output`].
pub trait Plant<T: Real> {
    fn dim(&self) -> usize;

    /// Maps the scalar control to actuator voltages.
    fn actuate(&self, u: T) -> ActuatorCommand<T>;

    /// Writes `ẋ = f(t, x, cmd)` into `dx`; `disturbance` is the active bias torque.
    fn derivative(&self, t: T, x: &[T], cmd: &ActuatorCommand<T>, disturbance: T, dx: &mut [T]);

    fn output(&self, x: &[T]) -> T;
}

/// Voltage offset that keeps both propellers spinning.
pub const AERO_VOLTAGE_OFFSET: f64 = 10.0;
/// Supply limit of each motor.
pub const AERO_VOLTAGE_LIMIT: f64 = 24.0;

/// Two-motor mixing: `u ≥ 0 → (10 + u, −10 − u)`, `u < 0 → (−10 + u, 10 − u)`,
/// then each voltage clamped to ±24 V.
pub fn mix_voltages<T: Real>(u: T) -> ActuatorCommand<T> {
    let off = T::lit(AERO_VOLTAGE_OFFSET);
    let lim = T::lit(AERO_VOLTAGE_LIMIT);
    let (v1, v2) = if u >= T::zero() {
        (off + u, -off - u)
    } else {
        (-off + u, off - u)
    };
    ActuatorCommand {
        v1: v1.max(-lim).min(lim),
        v2: v2.max(-lim).min(lim),
    }
}

/// Parameters of the half-quadrotor surrogate
/// `J θ̈ = k_t (φ(v₁) − φ(v₂))/2 − b θ̇ − c_g sin θ + d(t)`,
/// where `φ(v) = sign(v)·max(|v| − v_dz, 0)` models the motor dead zone.
/// With `deadband = 0` the torque is `k_t (v₁ − v₂)/2`.
///
/// The values are non-physical stand-ins for the bench, not an identified model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeroSurrogateParams<T> {
    /// Inertia, kg·m².
    pub inertia: T,
    /// Viscous friction, N·m·s.
    pub friction: T,
    /// Gravity coefficient, N·m.
    pub gravity: T,
    /// Thrust gain, N·m/V.
    pub thrust_gain: T,
    /// Motor dead zone, V.
    pub deadband: T,
}

impl<T: Real> Default for AeroSurrogateParams<T> {
    fn default() -> Self {
        Self {
            inertia: T::lit(0.02),
            friction: T::lit(0.3),
            gravity: T::lit(0.1),
            thrust_gain: T::lit(0.2),
            deadband: T::lit(AERO_VOLTAGE_OFFSET),
        }
    }
}

impl<T: Real> AeroSurrogateParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.inertia > T::zero()) {
            return Err(invalid("inertia must be positive"));
        }
        if self.friction < T::zero() || self.deadband < T::zero() {
            return Err(invalid("friction and deadband must be non-negative"));
        }
        Ok(())
    }

    fn motor(&self, v: T) -> T {
        let mag = (v.abs() - self.deadband).max(T::zero());
        if v < T::zero() {
            -mag
        } else {
            mag
        }
    }
}

/// `(θ̇, θ̈)` of the surrogate.
pub fn aero_derivative<T: Real>(
    params: &AeroSurrogateParams<T>,
    state: [T; 2],
    cmd: &ActuatorCommand<T>,
    disturbance: T,
) -> [T; 2] {
    let [theta, omega] = state;
    let torque = params.thrust_gain * (params.motor(cmd.v1) - params.motor(cmd.v2)) * T::lit(0.5);
    let acc = (torque - params.friction * omega - params.gravity * theta.sin() + disturbance) / params.inertia;
    [omega, acc]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroSurrogate<T> {
    pub params: AeroSurrogateParams<T>,
}

impl<T: Real> Default for AeroSurrogate<T> {
    fn default() -> Self {
        Self { params: AeroSurrogateParams::default() }
    }
}

impl<T: Real> Plant<T> for AeroSurrogate<T> {
    fn dim(&self) -> usize {
        2
    }

    fn actuate(&self, u: T) -> ActuatorCommand<T> {
        mix_voltages(u)
    }

    fn derivative(&self, _t: T, x: &[T], cmd: &ActuatorCommand<T>, disturbance: T, dx: &mut [T]) {
        let d = aero_derivative(&self.params, [x[0], x[1]], cmd, disturbance);
        dx[..2].copy_from_slice(&d);
    }

    fn output(&self, x: &[T]) -> T {
        x[0]
    }
}

/// Exact ultra-local plant `ÿ = gain·u + d(t)`, i.e. `F ≡ d`.
/// The command is reported as `v1 = u`, `v2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleIntegrator<T> {
    pub gain: T,
}

impl<T: Real> Plant<T> for DoubleIntegrator<T> {
    fn dim(&self) -> usize {
        2
    }

    fn actuate(&self, u: T) -> ActuatorCommand<T> {
        ActuatorCommand { v1: u, v2: T::zero() }
    }

    fn derivative(&self, _t: T, x: &[T], cmd: &ActuatorCommand<T>, disturbance: T, dx: &mut [T]) {
        dx[0] = x[1];
        dx[1] = self.gain * cmd.v1 + disturbance;
    }

    fn output(&self, x: &[T]) -> T {
        x[0]
    }
}

pub fn oracle_double_integrator<T: Real>(gain: T) -> DoubleIntegrator<T> {
    DoubleIntegrator { gain }
}

/// Serializable plant choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PlantSpec<T> {
    Aero(AeroSurrogateParams<T>),
    DoubleIntegrator { gain: T },
}

impl<T: Real> PlantSpec<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            PlantSpec::Aero(p) => p.validate(),
            PlantSpec::DoubleIntegrator { gain } if gain.is_finite() => Ok(()),
            PlantSpec::DoubleIntegrator { .. } => Err(invalid("plant gain must be finite")),
        }
    }
}

impl<T: Real> Plant<T> for PlantSpec<T> {
    fn dim(&self) -> usize {
        2
    }

    fn actuate(&self, u: T) -> ActuatorCommand<T> {
        match self {
            PlantSpec::Aero(p) => AeroSurrogate { params: *p }.actuate(u),
            PlantSpec::DoubleIntegrator { gain } => DoubleIntegrator { gain: *gain }.actuate(u),
        }
    }

    fn derivative(&self, t: T, x: &[T], cmd: &ActuatorCommand<T>, disturbance: T, dx: &mut [T]) {
        match self {
            PlantSpec::Aero(p) => AeroSurrogate { params: *p }.derivative(t, x, cmd, disturbance, dx),
            PlantSpec::DoubleIntegrator { gain } => {
                DoubleIntegrator { gain: *gain }.derivative(t, x, cmd, disturbance, dx)
            }
        }
    }

    fn output(&self, x: &[T]) -> T {
        x[0]
    }
}

/// Classic fourth-order Runge–Kutta with reusable stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Real> Rk4<T> {
    pub fn new(dim: usize) -> Self {
        let z = vec![T::zero(); dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advances `x` from `t` to `t + dt`.
    pub fn step<F>(&mut self, mut f: F, t: T, x: &mut [T], dt: T)
    where
        F: FnMut(T, &[T], &mut [T]),
    {
        let half = dt * T::lit(0.5);
        let n = x.len();
        f(t, x, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + half * self.k1[i];
        }
        f(t + half, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + half * self.k2[i];
        }
        f(t + half, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + dt * self.k3[i];
        }
        f(t + dt, &self.tmp, &mut self.k4);
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        for i in 0..n {
            x[i] = x[i] + sixth * (self.k1[i] + two * self.k2[i] + two * self.k3[i] + self.k4[i]);
        }
    }
}

/// Holds `u` over `[t, t + h)` and integrates the plant with `substeps` RK4 steps.
pub fn hold_and_integrate<T: Real, P: Plant<T> + ?Sized>(
    plant: &P,
    rk: &mut Rk4<T>,
    x: &mut [T],
    cmd: &ActuatorCommand<T>,
    disturbances: &[DisturbanceEvent<T>],
    t: T,
    h: T,
    substeps: usize,
) {
    let dt = h / T::from_count(substeps);
    for i in 0..substeps {
        let ti = t + T::from_count(i) * dt;
        rk.step(
            |tt, xx, dx| plant.derivative(tt, xx, cmd, disturbance_at(disturbances, tt), dx),
            ti,
            x,
            dt,
        );
    }
}
