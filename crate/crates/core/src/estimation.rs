//! Estimation of the lumped term `F` of the ultra-local model `y⁽ⁿ⁾ = F + αu`.
//!
//! The windowed estimators are the closed-form integrals obtained by treating
//! `F` as constant over the last `τ` seconds, realized as a pair of FIR kernels
//! applied to the output and input windows. Kernel weights are a midpoint
//! quadrature of the continuous kernels: sample `j` (oldest first) sits at the
//! window-local coordinate `σⱼ = (j + ½)h`, so `M` samples tile `[0, τ]` with
//! `τ = M·h` exactly.
//!
//! For `n = 2`:
//!
//! ```text
//! F̂ = 60/τ⁵ ∫₀^τ (τ² + 6σ² − 6τσ) y(σ) dσ − 30α/τ⁵ ∫₀^τ (τ − σ)² σ² u(σ) dσ
//! ```
//!
//! and for `n = 1`:
//!
//! ```text
//! F̂ = 6/τ³ ∫₀^τ (2σ − τ) y(σ) dσ − 6α/τ³ ∫₀^τ (τ − σ) σ u(σ) dσ
//! ```
//!
//! The discrete output kernel is shifted by its mean so it annihilates
//! constants (and, by symmetry, ramps) to rounding precision.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::signal::SampleWindow;

/// Derivation order `n` of the ultra-local model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelOrder {
    First,
    Second,
}

impl ModelOrder {
    pub fn n(self) -> u8 {
        match self {
            ModelOrder::First => 1,
            ModelOrder::Second => 2,
        }
    }

    pub fn from_n(n: u8) -> Result<Self> {
        match n {
            1 => Ok(ModelOrder::First),
            2 => Ok(ModelOrder::Second),
            _ => Err(invalid(format!("model order must be 1 or 2, got {n}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UltraLocalConfig<T> {
    pub order: ModelOrder,
    pub alpha: T,
    /// Window length `M` in samples.
    pub window: usize,
    /// Sampling period `h` in seconds.
    pub h: T,
}

impl<T: Real> UltraLocalConfig<T> {
    pub fn new(order: ModelOrder, alpha: T, window: usize, h: T) -> Result<Self> {
        let cfg = Self { order, alpha, window, h };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha == T::zero() || !self.alpha.is_finite() {
            return Err(invalid("alpha must be finite and nonzero"));
        }
        if self.window < 4 {
            return Err(invalid(format!(
                "window length must be at least 4, got {}",
                self.window
            )));
        }
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return Err(invalid("sampling period must be positive"));
        }
        Ok(())
    }

    /// Estimation horizon `τ = M·h`.
    pub fn tau(&self) -> T {
        T::from_count(self.window) * self.h
    }

    /// Window-local quadrature node of sample `j`.
    pub fn node(&self, j: usize) -> T {
        (T::from_count(j) + T::lit(0.5)) * self.h
    }
}

/// Output and input weights of a windowed estimator, oldest sample first.
#[derive(Debug, Clone, PartialEq)]
pub struct FirKernels<T> {
    pub order: ModelOrder,
    pub wy: Vec<T>,
    pub wu: Vec<T>,
}

impl<T: Real> FirKernels<T> {
    pub fn build(cfg: &UltraLocalConfig<T>) -> Result<Self> {
        match cfg.order {
            ModelOrder::First => build_kernels_order1(cfg),
            ModelOrder::Second => build_kernels_order2(cfg),
        }
    }

    pub fn len(&self) -> usize {
        self.wy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wy.is_empty()
    }

    /// Applies the kernels to raw value slices (oldest first).
    pub fn apply_slices(&self, y: &[T], u: &[T]) -> T {
        debug_assert_eq!(y.len(), self.wy.len());
        debug_assert_eq!(u.len(), self.wu.len());
        let fy: T = self.wy.iter().zip(y).map(|(&w, &v)| w * v).sum();
        let fu: T = self.wu.iter().zip(u).map(|(&w, &v)| w * v).sum();
        fy + fu
    }

    /// `F̂ = Σ wyⱼ·yⱼ + Σ wuⱼ·uⱼ` over two full, time-aligned windows.
    pub fn estimate(&self, y: &SampleWindow<T>, u: &SampleWindow<T>) -> Result<T> {
        let need = self.wy.len();
        if y.len() < need || u.len() < need {
            return Err(Error::WarmingUp {
                have: y.len().min(u.len()),
                need,
            });
        }
        if y.len() != need || u.len() != need {
            return Err(invalid("window length differs from kernel length"));
        }
        let aligned = y
            .times()
            .zip(u.times())
            .all(|(a, b)| (a - b).abs().as_f64() <= T::time_tolerance(1e-9, a.as_f64()));
        if !aligned {
            return Err(Error::MisalignedWindows);
        }
        let fy: T = self.wy.iter().zip(y.values()).map(|(&w, v)| w * v).sum();
        let fu: T = self.wu.iter().zip(u.values()).map(|(&w, v)| w * v).sum();
        Ok(fy + fu)
    }
}

fn subtract_mean<T: Real>(w: &mut [T]) {
    let mean = w.iter().copied().sum::<T>() / T::from_count(w.len());
    for x in w.iter_mut() {
        *x = *x - mean;
    }
}

/// Kernels for `ÿ = F + αu`.
pub fn build_kernels_order2<T: Real>(cfg: &UltraLocalConfig<T>) -> Result<FirKernels<T>> {
    cfg.validate()?;
    let tau = cfg.tau();
    let h = cfg.h;
    let tau5 = tau.powi(5);
    let six = T::lit(6.0);
    let mut wy: Vec<T> = (0..cfg.window)
        .map(|j| {
            let s = cfg.node(j);
            tau * tau + six * s * s - six * tau * s
        })
        .collect();
    subtract_mean(&mut wy);
    let cy = T::lit(60.0) * h / tau5;
    for w in wy.iter_mut() {
        *w = *w * cy;
    }
    let cu = -T::lit(30.0) * cfg.alpha * h / tau5;
    let wu = (0..cfg.window)
        .map(|j| {
            let s = cfg.node(j);
            let r = tau - s;
            cu * r * r * s * s
        })
        .collect();
    Ok(FirKernels {
        order: ModelOrder::Second,
        wy,
        wu,
    })
}

/// Kernels for `ẏ = F + αu`: the output kernel maps the unit ramp to 1 and
/// annihilates constants; the input kernel maps a constant `u` to `−αu`.
pub fn build_kernels_order1<T: Real>(cfg: &UltraLocalConfig<T>) -> Result<FirKernels<T>> {
    cfg.validate()?;
    let tau = cfg.tau();
    let h = cfg.h;
    let tau3 = tau.powi(3);
    let two = T::lit(2.0);
    let mut wy: Vec<T> = (0..cfg.window).map(|j| two * cfg.node(j) - tau).collect();
    subtract_mean(&mut wy);
    let cy = T::lit(6.0) * h / tau3;
    for w in wy.iter_mut() {
        *w = *w * cy;
    }
    let cu = -T::lit(6.0) * cfg.alpha * h / tau3;
    let wu = (0..cfg.window)
        .map(|j| {
            let s = cfg.node(j);
            cu * (tau - s) * s
        })
        .collect();
    Ok(FirKernels {
        order: ModelOrder::First,
        wy,
        wu,
    })
}

pub fn estimate_f_order2<T: Real>(
    kernels: &FirKernels<T>,
    y: &SampleWindow<T>,
    u: &SampleWindow<T>,
) -> Result<T> {
    debug_assert_eq!(kernels.order, ModelOrder::Second);
    kernels.estimate(y, u)
}

pub fn estimate_f_order1_window<T: Real>(
    kernels: &FirKernels<T>,
    y: &SampleWindow<T>,
    u: &SampleWindow<T>,
) -> Result<T> {
    debug_assert_eq!(kernels.order, ModelOrder::First);
    kernels.estimate(y, u)
}

/// One-step estimate `(y(t) − y(t−h))/h − α·u(t−h)`.
pub fn estimate_f_order1_diff<T: Real>(y_t: T, y_prev: T, u_prev: T, cfg: &UltraLocalConfig<T>) -> T {
    (y_t - y_prev) / cfg.h - cfg.alpha * u_prev
}

/// Two-step estimate `(y(t) − 2y(t−h) + y(t−2h))/h² − α·u(t−h)`.
pub fn estimate_f_order2_diff<T: Real>(
    y_t: T,
    y_prev: T,
    y_prev2: T,
    u_prev: T,
    cfg: &UltraLocalConfig<T>,
) -> T {
    (y_t - T::lit(2.0) * y_prev + y_prev2) / (cfg.h * cfg.h) - cfg.alpha * u_prev
}

/// Running state of the output transform `Y(t) = y(t) + K_D ∫_c^t y(σ) dσ`.
///
/// Feeding the windowed order-2 estimator with `Y` instead of `y` returns
/// `F + K_D·ẏ`, which lets an iPD run without differentiating the output.
#[derive(Debug, Clone, PartialEq)]
pub struct RiachyState<T> {
    pub gain: T,
    pub accumulator: T,
    pub origin: T,
    last: Option<(T, T)>,
}

impl<T: Real> RiachyState<T> {
    pub fn new(gain: T, origin: T) -> Self {
        Self {
            gain,
            accumulator: T::zero(),
            origin,
            last: None,
        }
    }

    /// Advances the integral by a trapezoid step from the previous sample and
    /// returns `Y(t)`. Samples older than the origin do not contribute.
    pub fn update(&mut self, t: T, y: T) -> T {
        if let Some((tl, yl)) = self.last {
            if tl >= self.origin && t > tl {
                self.accumulator = self.accumulator + (t - tl) * (y + yl) * T::lit(0.5);
            }
        }
        self.last = Some((t, y));
        self.transformed(y)
    }

    pub fn transformed(&self, y: T) -> T {
        y + self.gain * self.accumulator
    }

    /// Moves the integration origin to `t` and clears the accumulator.
    /// Returns the accumulator value that was released.
    pub fn reset(&mut self, t: T) -> T {
        let released = self.accumulator;
        self.origin = t;
        self.accumulator = T::zero();
        if let Some((tl, _)) = self.last {
            if tl > t {
                self.last = None;
            }
        }
        released
    }
}

pub fn riachy_update<T: Real>(state: &mut RiachyState<T>, t: T, y: T) -> T {
    state.update(t, y)
}

pub fn riachy_reset<T: Real>(state: &mut RiachyState<T>, t: T) {
    state.reset(t);
}
