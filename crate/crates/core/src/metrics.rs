//! Tracking metrics computed from a closed-loop trace.
//!
//! All metrics use the true tracking error `y_true − y_ref`, so encoder
//! quantization and sensor noise do not show up as oscillation.

use serde::Serialize;

use crate::scalar::Real;
use crate::scenario::ScenarioSpec;
use crate::simulation::{SimOutcome, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig<T> {
    /// Settling band as a fraction of each segment's step size.
    pub band_fraction: T,
    /// Absolute band used when a segment has no step (and for disturbance recovery).
    pub recovery_band: T,
    /// Length of the tail of each segment over which the steady error is taken.
    pub steady_window: T,
    /// Reversal amplitude for the oscillation index.
    pub oscillation_threshold: T,
}

impl<T: Real> Default for MetricsConfig<T> {
    fn default() -> Self {
        Self {
            band_fraction: T::lit(0.02),
            recovery_band: T::lit(0.02),
            steady_window: T::one(),
            oscillation_threshold: T::lit(2e-3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentMetrics<T> {
    pub start: T,
    pub end: T,
    pub step: T,
    /// Time from segment start until `|e|` enters and stays in the band.
    pub settling_time: Option<T>,
    /// Peak error past the target in the step direction, as a fraction of `|step|`.
    pub overshoot: T,
    /// Largest `|e|` over the last `steady_window` seconds of the segment.
    pub steady_error: T,
    pub oscillation_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics<T> {
    pub rmse: T,
    pub iae: T,
    pub max_abs_error: T,
    pub max_overshoot: T,
    /// Longest per-segment settling time; absent if any segment with a step fails to settle.
    pub settling_time: Option<T>,
    pub oscillation_index: usize,
    /// One entry per disturbance: time from its end until `|e|` stays within `recovery_band`.
    pub recovery_times: Vec<Option<T>>,
    pub segments: Vec<SegmentMetrics<T>>,
    pub diverged: bool,
}

/// Number of direction reversals of `e` whose swing exceeds `threshold`,
/// i.e. zero crossings of `ė` with hysteresis.
pub fn count_reversals<T: Real>(values: impl IntoIterator<Item = T>, threshold: T) -> usize {
    let mut it = values.into_iter();
    let Some(first) = it.next() else { return 0 };
    let (mut hi, mut lo) = (first, first);
    let mut dir = 0i8;
    let mut count = 0;
    for v in it {
        if dir >= 0 {
            if v > hi {
                hi = v;
            } else if hi - v > threshold {
                if dir == 1 {
                    count += 1;
                }
                dir = -1;
                lo = v;
                continue;
            }
        }
        if dir <= 0 {
            if v < lo {
                lo = v;
            } else if v - lo > threshold {
                if dir == -1 {
                    count += 1;
                }
                dir = 1;
                hi = v;
            }
        }
    }
    count
}

/// First time from which every remaining `|e|` stays within `band`.
fn entry_time<T: Real>(rows: &[TraceRecord<T>], band: T) -> Option<T> {
    let last_out = rows.iter().rposition(|r| !(r.tracking_error().abs() <= band));
    match last_out {
        None => rows.first().map(|r| r.t),
        Some(i) if i + 1 < rows.len() => Some(rows[i + 1].t),
        Some(_) => None,
    }
}

pub fn compute_metrics<T: Real>(outcome: &SimOutcome<T>, scenario: &ScenarioSpec<T>, cfg: &MetricsConfig<T>) -> Metrics<T> {
    let trace = &outcome.trace;
    let h = scenario.grid.h;
    let n = trace.len();
    let (sum_sq, sum_abs, max_abs) = trace.iter().fold((T::zero(), T::zero(), T::zero()), |(s, a, m), r| {
        (s + r.tracking_error() * r.tracking_error(), a + r.tracking_error().abs(), m.max(r.tracking_error().abs()))
    });
    let rmse = if n > 0 { (sum_sq / T::from_count(n)).sqrt() } else { T::zero() };

    let reference = &scenario.reference;
    let end_time = scenario.grid.duration;
    let mut segments = Vec::with_capacity(reference.segments.len());
    for (i, seg) in reference.segments.iter().enumerate() {
        let end = reference.segments.get(i + 1).map_or(end_time, |s| s.start);
        let rows: Vec<TraceRecord<T>> = trace.iter().copied().filter(|r| r.t >= seg.start && r.t < end).collect();
        let step = seg.value - reference.value_before(i);
        let band = if step != T::zero() { cfg.band_fraction * step.abs() } else { cfg.recovery_band };
        let complete = !outcome.diverged && rows.last().is_some_and(|r| r.t + h >= end - h * T::lit(0.5));
        let settling_time = if complete { entry_time(&rows, band).map(|t| t - seg.start) } else { None };
        let overshoot = if step != T::zero() {
            let dir = step.signum();
            let peak = rows.iter().map(|r| r.tracking_error() * dir).fold(T::zero(), |a, b| a.max(b));
            peak / step.abs()
        } else {
            T::zero()
        };
        let steady_error = rows
            .iter()
            .filter(|r| r.t >= end - cfg.steady_window)
            .fold(T::zero(), |a, r| a.max(r.tracking_error().abs()));
        let settled_rows = rows.iter().filter(|r| r.t >= seg.start + seg.transition).map(|r| r.tracking_error());
        segments.push(SegmentMetrics {
            start: seg.start,
            end,
            step,
            settling_time,
            overshoot,
            steady_error,
            oscillation_index: count_reversals(settled_rows, cfg.oscillation_threshold),
        });
    }

    let with_step = segments.iter().filter(|s| s.step != T::zero());
    let settling_time = with_step
        .clone()
        .map(|s| s.settling_time)
        .try_fold(T::zero(), |acc, s| s.map(|v| acc.max(v)));
    let settling_time = if outcome.diverged { None } else { settling_time };

    let recovery_times = scenario
        .disturbances
        .iter()
        .map(|d| {
            if outcome.diverged {
                return None;
            }
            let from = d.end();
            let until = reference.change_times().filter(|&c| c > from).fold(end_time, |a, b| a.min(b));
            let rows: Vec<TraceRecord<T>> = trace.iter().copied().filter(|r| r.t >= from && r.t < until).collect();
            entry_time(&rows, cfg.recovery_band).map(|t| t - from)
        })
        .collect();

    Metrics {
        rmse,
        iae: sum_abs * h,
        max_abs_error: max_abs,
        max_overshoot: segments.iter().map(|s| s.overshoot).fold(T::zero(), |a, b| a.max(b)),
        settling_time,
        oscillation_index: segments.iter().map(|s| s.oscillation_index).sum(),
        recovery_times,
        segments,
        diverged: outcome.diverged,
    }
}
