//! `--set KEY=VALUE` overrides, parsed and type-checked before anything runs.

use anyhow::{anyhow, bail, Result};
use ultralocal::{DerivativeMode, EstimatorKind, Scenario};

pub const KEYS: &str = "K_P, K_I, K_D, alpha, h, M, ki_scale, u_limit, duration, noise_std, quantization, derivative, estimator";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Override {
    Kp(f64),
    Ki(f64),
    Kd(f64),
    Alpha(f64),
    H(f64),
    Window(usize),
    KiScale(f64),
    ULimit(f64),
    Duration(f64),
    NoiseStd(f64),
    Quantization(f64),
    Derivative(DerivativeMode),
    Estimator(EstimatorKind),
}

fn number(key: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw.parse().map_err(|_| anyhow!("{key}: expected a number, got {raw:?}"))?;
    if !v.is_finite() {
        bail!("{key}: value must be finite");
    }
    Ok(v)
}

pub fn parse(item: &str) -> Result<Override> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| anyhow!("override {item:?} is not KEY=VALUE"))?;
    let (key, raw) = (key.trim(), raw.trim());
    let o = match key {
        "K_P" | "kp" => Override::Kp(number(key, raw)?),
        "K_I" | "ki" => Override::Ki(number(key, raw)?),
        "K_D" | "kd" => Override::Kd(number(key, raw)?),
        "alpha" => Override::Alpha(number(key, raw)?),
        "h" => Override::H(number(key, raw)?),
        "M" | "window" => Override::Window(raw.parse().map_err(|_| anyhow!("{key}: expected a count, got {raw:?}"))?),
        "ki_scale" => Override::KiScale(number(key, raw)?),
        "u_limit" => Override::ULimit(number(key, raw)?),
        "duration" => Override::Duration(number(key, raw)?),
        "noise_std" => Override::NoiseStd(number(key, raw)?),
        "quantization" => Override::Quantization(number(key, raw)?),
        "derivative" => Override::Derivative(match raw {
            "riachy" => DerivativeMode::Riachy,
            "backward-difference" => DerivativeMode::BackwardDifference,
            _ => bail!("derivative: expected riachy or backward-difference, got {raw:?}"),
        }),
        "estimator" => Override::Estimator(match raw {
            "window" => EstimatorKind::Window,
            "difference" => EstimatorKind::Difference,
            _ => bail!("estimator: expected window or difference, got {raw:?}"),
        }),
        _ => bail!("unknown override key {key:?}; known keys: {KEYS}"),
    };
    Ok(o)
}

pub fn parse_all(items: &[String]) -> Result<Vec<Override>> {
    items.iter().map(|s| parse(s)).collect()
}

/// Applies overrides in order, then validates the result.
pub fn apply(scenario: &mut Scenario, overrides: &[Override]) -> Result<()> {
    let c = &mut scenario.controller;
    for o in overrides {
        match *o {
            Override::Kp(v) => c.gains.kp = v,
            Override::Ki(v) => c.gains.ki = v,
            Override::Kd(v) => c.gains.kd = v,
            Override::Alpha(v) => c.model.alpha = v,
            Override::H(v) => {
                c.model.h = v;
                scenario.grid.h = v;
            }
            Override::Window(m) => c.model.window = m,
            Override::KiScale(s) => c.gains.ki *= s,
            Override::ULimit(v) => {
                c.u_min = -v.abs();
                c.u_max = v.abs();
            }
            Override::Duration(v) => scenario.grid.duration = v,
            Override::NoiseStd(v) => scenario.noise.std = v,
            Override::Quantization(v) => scenario.noise.quantization = v,
            Override::Derivative(d) => c.derivative = d,
            Override::Estimator(e) => c.estimator = e,
        }
    }
    scenario.validate()?;
    Ok(())
}
