//! Intelligent controllers (iP, iPD, iPID) and a velocity-form classic PID.
//!
//! All intelligent laws cancel the estimated term `F̂` through the input
//! channel and impose linear error dynamics, e.g. for the iPID
//! `ë + K_D ė + K_P e + K_I ∫e = F − F̂`. The error is `e = y − y*`.

use serde::{Deserialize, Serialize};

use crate::equivalence::ClassicGains;
use crate::error::{invalid, Error, Result};
use crate::estimation::{
    estimate_f_order1_diff, estimate_f_order2_diff, FirKernels, ModelOrder, RiachyState,
    UltraLocalConfig,
};
use crate::scalar::Real;
use crate::signal::{RefSample, SampleWindow};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GainSet<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControllerKind {
    #[serde(rename = "iP")]
    IP,
    #[serde(rename = "iPD")]
    IPD,
    #[serde(rename = "iPID")]
    IPID,
    #[serde(rename = "classicPID")]
    ClassicPid,
}

impl ControllerKind {
    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::IP => "iP",
            ControllerKind::IPD => "iPD",
            ControllerKind::IPID => "iPID",
            ControllerKind::ClassicPid => "classicPID",
        }
    }
}

/// How the derivative action of iPD/iPID is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    /// Estimate `F + K_D ẏ` from `Y = y + K_D ∫y`; no output derivative is formed.
    Riachy,
    /// `ė` as a backward difference of the sampled error.
    BackwardDifference,
}

/// Source of `F̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// FIR realization of the windowed estimation integral.
    Window,
    /// `y⁽ⁿ⁾` by backward differences minus `α u(t−h)`.
    Difference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec<T> {
    pub kind: ControllerKind,
    pub gains: GainSet<T>,
    /// Only read by [`ControllerKind::ClassicPid`].
    #[serde(default)]
    pub classic: ClassicGains<T>,
    pub model: UltraLocalConfig<T>,
    pub derivative: DerivativeMode,
    pub estimator: EstimatorKind,
    pub u_min: T,
    pub u_max: T,
    /// Reset `∫e` and the Riachy origin at every setpoint change.
    #[serde(default = "default_true")]
    pub reset_on_setpoint_change: bool,
}

fn default_true() -> bool {
    true
}

impl<T: Real> ControllerSpec<T> {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let g = &self.gains;
        for (name, v) in [("K_P", g.kp), ("K_I", g.ki), ("K_D", g.kd)] {
            if !v.is_finite() || v < T::zero() {
                return Err(invalid(format!("{name} must be finite and non-negative")));
            }
        }
        let c = &self.classic;
        if !(c.kp.is_finite() && c.ki.is_finite() && c.kd.is_finite()) {
            return Err(invalid("classic gains must be finite"));
        }
        if !(self.u_min < self.u_max) {
            return Err(invalid("u_min must be below u_max"));
        }
        match self.kind {
            ControllerKind::IP => {
                if self.model.order != ModelOrder::First {
                    return Err(invalid("iP requires an order-1 ultra-local model"));
                }
                if g.ki != T::zero() || g.kd != T::zero() {
                    return Err(invalid("iP takes K_I = K_D = 0"));
                }
            }
            ControllerKind::IPD | ControllerKind::IPID => {
                if self.model.order != ModelOrder::Second {
                    return Err(invalid("iPD/iPID require an order-2 ultra-local model"));
                }
                if self.kind == ControllerKind::IPD && g.ki != T::zero() {
                    return Err(invalid("iPD takes K_I = 0"));
                }
            }
            ControllerKind::ClassicPid => {}
        }
        Ok(())
    }

    /// Whether the Riachy transform is active for this spec.
    pub fn uses_riachy(&self) -> bool {
        matches!(self.kind, ControllerKind::IPD | ControllerKind::IPID)
            && self.derivative == DerivativeMode::Riachy
    }
}

/// Per-tick diagnostic output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlStep<T> {
    pub u: T,
    pub f_est: T,
    pub e: T,
    pub warming_up: bool,
    pub saturated: bool,
}

/// iP: `u = −(F̂ − ẏ* + K_P e)/α`.
#[inline]
pub fn ip_law<T: Real>(f_est: T, dy_ref: T, e: T, kp: T, alpha: T) -> T {
    -(f_est - dy_ref + kp * e) / alpha
}

/// iPD: `u = −(F̂ − ÿ* + K_P e + K_D ė)/α`.
#[inline]
pub fn ipd_law<T: Real>(f_est: T, ddy_ref: T, e: T, de: T, kp: T, kd: T, alpha: T) -> T {
    -(f_est - ddy_ref + kp * e + kd * de) / alpha
}

/// iPID: `u = −(F̂ − ÿ* + K_P e + K_I ∫e + K_D ė)/α`.
#[inline]
pub fn ipid_law<T: Real>(f_est: T, ddy_ref: T, e: T, int_e: T, de: T, gains: &GainSet<T>, alpha: T) -> T {
    -(f_est - ddy_ref + gains.kp * e + gains.ki * int_e + gains.kd * de) / alpha
}

/// iPID on the transformed output: `u = −(𝔉̂ − ÿ* + K_P e + K_I ∫e − K_D ẏ*)/α`,
/// where `𝔉̂` estimates `F + K_D ẏ`.
#[inline]
pub fn ipd_riachy_law<T: Real>(
    frak_f_est: T,
    ddy_ref: T,
    e: T,
    int_e: T,
    dy_ref: T,
    gains: &GainSet<T>,
    alpha: T,
) -> T {
    -(frak_f_est - ddy_ref + gains.kp * e + gains.ki * int_e - gains.kd * dy_ref) / alpha
}

/// Velocity-form PID, `u(t) = u(t−h) + h (k_p ė + k_i e + k_d ë)` with
/// backward-difference `ė` and `ë`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicPidState<T> {
    pub gains: ClassicGains<T>,
    pub h: T,
    pub u: T,
    pub e1: T,
    pub e2: T,
}

impl<T: Real> ClassicPidState<T> {
    /// State with previous command `u` and error history `e(t−h) = e1`, `e(t−2h) = e2`.
    pub fn primed(gains: ClassicGains<T>, h: T, u: T, e1: T, e2: T) -> Self {
        Self { gains, h, u, e1, e2 }
    }

    pub fn step(&mut self, e: T) -> T {
        let u = classic_pid_step(e, self);
        self.e2 = self.e1;
        self.e1 = e;
        self.u = u;
        u
    }
}

/// Command for error `e_t` given the state, without advancing it.
pub fn classic_pid_step<T: Real>(e_t: T, state: &ClassicPidState<T>) -> T {
    let h = state.h;
    let de = (e_t - state.e1) / h;
    let dde = (e_t - T::lit(2.0) * state.e1 + state.e2) / (h * h);
    let g = &state.gains;
    state.u + h * (g.kp * de + g.ki * e_t + g.kd * dde)
}

/// Sampled controller: windows, estimator, law and saturation, one call per tick.
#[derive(Debug, Clone)]
pub struct Controller<T> {
    spec: ControllerSpec<T>,
    kernels: Option<FirKernels<T>>,
    signal: SampleWindow<T>,
    inputs: SampleWindow<T>,
    riachy: Option<RiachyState<T>>,
    int_e: T,
    skip_integral: bool,
    prev_e: Option<T>,
    last_u: T,
    pid: Option<ClassicPidState<T>>,
    e_history: Vec<T>,
}

impl<T: Real> Controller<T> {
    pub fn new(spec: ControllerSpec<T>) -> Result<Self> {
        spec.validate()?;
        let m = &spec.model;
        let (kernels, depth) = match (spec.kind, spec.estimator) {
            (ControllerKind::ClassicPid, _) => (None, 1),
            (_, EstimatorKind::Window) => (Some(FirKernels::build(m)?), m.window),
            (_, EstimatorKind::Difference) => (None, m.order.n() as usize + 1),
        };
        let riachy = spec
            .uses_riachy()
            .then(|| RiachyState::new(spec.gains.kd, T::zero()));
        Ok(Self {
            kernels,
            signal: SampleWindow::with_spacing(depth, m.h),
            inputs: SampleWindow::with_spacing(depth, m.h),
            riachy,
            int_e: T::zero(),
            skip_integral: true,
            prev_e: None,
            last_u: T::zero(),
            pid: None,
            e_history: Vec::with_capacity(2),
            spec,
        })
    }

    pub fn spec(&self) -> &ControllerSpec<T> {
        &self.spec
    }

    pub fn integral(&self) -> T {
        self.int_e
    }

    pub fn riachy(&self) -> Option<&RiachyState<T>> {
        self.riachy.as_ref()
    }

    /// Clears `∫e` and moves the Riachy origin to `t`. Stored samples of the
    /// transformed output are rebased, which leaves `F̂` unchanged because the
    /// output kernel annihilates constants.
    pub fn reset(&mut self, t: T) {
        self.int_e = T::zero();
        self.skip_integral = true;
        if let Some(st) = self.riachy.as_mut() {
            let released = st.reset(t);
            let shift = -st.gain * released;
            self.signal.shift_values(shift);
        }
    }

    fn estimate(&self) -> Result<T> {
        if let Some(k) = &self.kernels {
            return k.estimate(&self.signal, &self.inputs);
        }
        let need = self.spec.model.order.n() as usize + 1;
        if self.signal.len() < need {
            return Err(Error::WarmingUp {
                have: self.signal.len(),
                need,
            });
        }
        let s: Vec<T> = self.signal.values().rev().take(need).collect();
        let m = &self.spec.model;
        Ok(match m.order {
            ModelOrder::First => estimate_f_order1_diff(s[0], s[1], self.last_u, m),
            ModelOrder::Second => estimate_f_order2_diff(s[0], s[1], s[2], self.last_u, m),
        })
    }

    /// Processes the measurement taken at tick time `t`.
    pub fn step(&mut self, t: T, y: T, reference: RefSample<T>, setpoint_change: bool) -> Result<ControlStep<T>> {
        let e = y - reference.y;
        let h = self.spec.model.h;

        if self.spec.kind == ControllerKind::ClassicPid {
            // classic regulators act on the conventional error y* − y
            let mut step = self.step_classic(-e);
            step.e = e;
            return Ok(step);
        }

        // Integrate up to `t` before releasing, so that the stored window and
        // the new sample are rebased by the same amount.
        if let Some(st) = self.riachy.as_mut() {
            st.update(t, y);
        }
        if setpoint_change && self.spec.reset_on_setpoint_change {
            self.reset(t);
        }
        let s = match self.riachy.as_ref() {
            Some(st) => st.transformed(y),
            None => y,
        };
        self.signal.push(t, s)?;
        self.inputs.push(t, self.last_u)?;

        let f_est = match self.estimate() {
            Ok(f) => f,
            Err(Error::WarmingUp { .. }) => return Ok(self.warm_up(e)),
            Err(err) => return Err(err),
        };
        let de = match (self.spec.derivative, self.prev_e) {
            (DerivativeMode::BackwardDifference, Some(p)) => (e - p) / h,
            (DerivativeMode::BackwardDifference, None) => return Ok(self.warm_up(e)),
            (DerivativeMode::Riachy, _) => T::zero(),
        };

        let int_candidate = match self.prev_e {
            Some(p) if !self.skip_integral => self.int_e + h * (e + p) * T::lit(0.5),
            _ => self.int_e,
        };

        let alpha = self.spec.model.alpha;
        let g = self.spec.gains;
        let raw = match self.spec.kind {
            ControllerKind::IP => ip_law(f_est, reference.dy, e, g.kp, alpha),
            _ if self.riachy.is_some() => {
                ipd_riachy_law(f_est, reference.ddy, e, int_candidate, reference.dy, &g, alpha)
            }
            _ => ipid_law(f_est, reference.ddy, e, int_candidate, de, &g, alpha),
        };
        let (u, saturated) = self.saturate(raw);
        if !saturated {
            self.int_e = int_candidate;
        }
        self.skip_integral = false;
        self.prev_e = Some(e);
        self.last_u = u;
        Ok(ControlStep {
            u,
            f_est,
            e,
            warming_up: false,
            saturated,
        })
    }

    fn saturate(&self, raw: T) -> (T, bool) {
        if raw > self.spec.u_max {
            (self.spec.u_max, true)
        } else if raw < self.spec.u_min {
            (self.spec.u_min, true)
        } else if raw.is_nan() {
            (T::zero(), true)
        } else {
            (raw, false)
        }
    }

    fn warm_up(&mut self, e: T) -> ControlStep<T> {
        self.prev_e = Some(e);
        self.last_u = T::zero();
        ControlStep {
            u: T::zero(),
            f_est: T::zero(),
            e,
            warming_up: true,
            saturated: false,
        }
    }

    fn step_classic(&mut self, e: T) -> ControlStep<T> {
        let Some(pid) = self.pid.as_mut() else {
            self.e_history.push(e);
            if self.e_history.len() == 2 {
                let (e2, e1) = (self.e_history[0], self.e_history[1]);
                self.pid = Some(ClassicPidState::primed(self.spec.classic, self.spec.model.h, T::zero(), e1, e2));
            }
            return self.warm_up(e);
        };
        let raw = classic_pid_step(e, pid);
        let (u, saturated) = if raw > self.spec.u_max {
            (self.spec.u_max, true)
        } else if raw < self.spec.u_min {
            (self.spec.u_min, true)
        } else {
            (raw, false)
        };
        pid.e2 = pid.e1;
        pid.e1 = e;
        pid.u = u;
        self.last_u = u;
        ControlStep {
            u,
            f_est: T::zero(),
            e,
            warming_up: false,
            saturated,
        }
    }
}
