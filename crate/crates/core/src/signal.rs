//! Time base, sample buffering, reference trajectories and measurement noise.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Controller sampling grid: period `h`, RK4 substeps per period and total duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    pub h: T,
    pub substeps: usize,
    pub duration: T,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(h: T, substeps: usize, duration: T) -> Result<Self> {
        let grid = Self { h, substeps, duration };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return Err(invalid("sampling period must be positive"));
        }
        if self.substeps == 0 {
            return Err(invalid("substeps must be at least 1"));
        }
        if self.duration < T::zero() || !self.duration.is_finite() {
            return Err(invalid("duration must be non-negative"));
        }
        let ratio = self.duration.as_f64() / self.h.as_f64();
        if (ratio - ratio.round()).abs() * self.h.as_f64() > T::time_tolerance(1e-12, self.duration.as_f64()) {
            return Err(invalid(format!(
                "duration {} is not a multiple of h = {}",
                self.duration, self.h
            )));
        }
        Ok(())
    }

    /// Number of controller ticks in the run.
    pub fn steps(&self) -> usize {
        (self.duration.as_f64() / self.h.as_f64()).round() as usize
    }

    /// Time of tick `k`; computed by multiplication so long runs do not drift.
    #[inline]
    pub fn time(&self, k: usize) -> T {
        T::from_count(k) * self.h
    }

    pub fn substep(&self) -> T {
        self.h / T::from_count(self.substeps)
    }
}

/// Fixed-capacity buffer of uniformly spaced `(t, value)` samples, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow<T> {
    capacity: usize,
    spacing: Option<T>,
    entries: VecDeque<(T, T)>,
}

impl<T: Real> SampleWindow<T> {
    /// Window holding at most `capacity` samples with no spacing check.
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            spacing: None,
            entries: VecDeque::with_capacity(capacity + 1),
        }
    }

    /// Window that also rejects samples not spaced `h` apart (1e-9 tolerance).
    pub fn with_spacing(capacity: usize, h: T) -> Self {
        Self {
            spacing: Some(h),
            ..Self::new(capacity)
        }
    }

    pub fn push(&mut self, t: T, value: T) -> Result<()> {
        if let Some(&(last, _)) = self.entries.back() {
            if !(t > last) {
                return Err(Error::NonMonotonicTimestamp {
                    last: last.as_f64(),
                    got: t.as_f64(),
                });
            }
            if let Some(h) = self.spacing {
                let dt = (t - last).as_f64();
                if (dt - h.as_f64()).abs() > T::time_tolerance(1e-9, t.as_f64()) {
                    return Err(Error::NonUniformSpacing {
                        expected: h.as_f64(),
                        got: dt,
                    });
                }
            }
        }
        self.entries.push_back((t, value));
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &(T, T)> + ExactSizeIterator + '_ {
        self.entries.iter()
    }

    pub fn values(&self) -> impl DoubleEndedIterator<Item = T> + ExactSizeIterator + '_ {
        self.entries.iter().map(|&(_, v)| v)
    }

    pub fn times(&self) -> impl DoubleEndedIterator<Item = T> + ExactSizeIterator + '_ {
        self.entries.iter().map(|&(t, _)| t)
    }

    pub fn newest(&self) -> Option<(T, T)> {
        self.entries.back().copied()
    }

    pub fn oldest(&self) -> Option<(T, T)> {
        self.entries.front().copied()
    }

    /// Adds `delta` to every stored value. Used when a running integral is rebased.
    pub fn shift_values(&mut self, delta: T) {
        for entry in self.entries.iter_mut() {
            entry.1 = entry.1 + delta;
        }
    }
}

/// One setpoint change: starting at `start`, blend to `value` over `transition` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetpointSegment<T> {
    pub start: T,
    pub value: T,
    pub transition: T,
}

/// Reference value and its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RefSample<T> {
    pub y: T,
    pub dy: T,
    pub ddy: T,
}

/// Piecewise schedule of setpoints joined by quintic blends with zero end
/// velocity and acceleration. Before the first segment the output is `initial`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTrajectory<T> {
    pub initial: T,
    #[serde(default)]
    pub segments: Vec<SetpointSegment<T>>,
}

impl<T: Real> ReferenceTrajectory<T> {
    pub fn new(initial: T, segments: Vec<SetpointSegment<T>>) -> Result<Self> {
        let traj = Self { initial, segments };
        traj.validate()?;
        Ok(traj)
    }

    pub fn constant(value: T) -> Self {
        Self {
            initial: value,
            segments: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev_end: Option<T> = None;
        for (i, seg) in self.segments.iter().enumerate() {
            if !seg.start.is_finite() || !seg.value.is_finite() || !seg.transition.is_finite() {
                return Err(invalid(format!("segment {i} has non-finite fields")));
            }
            if seg.transition < T::zero() {
                return Err(invalid(format!("segment {i} has a negative transition")));
            }
            if let Some(end) = prev_end {
                if seg.start < end {
                    return Err(invalid(format!(
                        "segment {i} starts before the previous transition ends"
                    )));
                }
            }
            prev_end = Some(seg.start + seg.transition);
        }
        Ok(())
    }

    /// Value held before segment `i` starts.
    pub fn value_before(&self, i: usize) -> T {
        if i == 0 {
            self.initial
        } else {
            self.segments[i - 1].value
        }
    }

    /// Setpoint-change instants (segment starts).
    pub fn change_times(&self) -> impl Iterator<Item = T> + '_ {
        self.segments.iter().map(|s| s.start)
    }

    pub fn eval(&self, t: T) -> RefSample<T> {
        // index of the last segment that has started
        let idx = self.segments.iter().rposition(|s| t >= s.start);
        let Some(i) = idx else {
            return RefSample {
                y: self.initial,
                ..Default::default()
            };
        };
        let seg = &self.segments[i];
        let from = self.value_before(i);
        if seg.transition > T::zero() && t < seg.start + seg.transition {
            let step = seg.value - from;
            let s = (t - seg.start) / seg.transition;
            let (p, dp, ddp) = quintic_blend(s);
            RefSample {
                y: from + step * p,
                dy: step * dp / seg.transition,
                ddy: step * ddp / (seg.transition * seg.transition),
            }
        } else {
            RefSample {
                y: seg.value,
                ..Default::default()
            }
        }
    }
}

/// `10s³ − 15s⁴ + 6s⁵` and its first two derivatives in `s`.
fn quintic_blend<T: Real>(s: T) -> (T, T, T) {
    let s2 = s * s;
    let s3 = s2 * s;
    let p = s3 * (T::lit(10.0) + s * (T::lit(-15.0) + s * T::lit(6.0)));
    let dp = T::lit(30.0) * s2 * (T::one() - s) * (T::one() - s);
    let ddp = T::lit(60.0) * s * (T::one() - s) * (T::one() - T::lit(2.0) * s);
    (p, dp, ddp)
}

/// Encoder quantization plus additive Gaussian measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel<T> {
    pub quantization: T,
    pub std: T,
    pub seed: u64,
}

impl<T: Real> NoiseModel<T> {
    pub fn none() -> Self {
        Self {
            quantization: T::zero(),
            std: T::zero(),
            seed: 0,
        }
    }

    /// `2π/2048` rad, an 11-bit encoder.
    pub fn default_encoder_step() -> T {
        T::lit(2.0 * std::f64::consts::PI / 2048.0)
    }

    pub fn encoder(seed: u64) -> Self {
        Self {
            quantization: Self::default_encoder_step(),
            std: T::zero(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.quantization < T::zero() || self.std < T::zero() {
            return Err(invalid("noise quantization and std must be non-negative"));
        }
        Ok(())
    }

    pub fn source(&self) -> NoiseSource<T> {
        NoiseSource {
            model: *self,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

/// Seeded stream of corrupted measurements.
#[derive(Debug, Clone)]
pub struct NoiseSource<T> {
    model: NoiseModel<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> NoiseSource<T> {
    pub fn corrupt(&mut self, y_true: T) -> T {
        let mut y = y_true;
        if self.model.std > T::zero() {
            let g: f64 = StandardNormal.sample(&mut self.rng);
            y = y + self.model.std * T::lit(g);
        }
        quantize(y, self.model.quantization)
    }
}

/// Rounds to the nearest multiple of `q`; `q = 0` is the identity.
pub fn quantize<T: Real>(y: T, q: T) -> T {
    if q > T::zero() {
        (y / q).round() * q
    } else {
        y
    }
}
