//! Scenario catalog and controller comparisons.
//!
//! Scenarios 1–9 are desk-scale analogues of the half-quadrotor experiment:
//! 1–3 run an iP on an order-1 model, 4–6 the iPD on an order-2 model and 7–9
//! the iPID with increasing `K_I`. Scenarios 3 and 6 add a torque disturbance
//! at `t = 15 s`. All share `h = 10 ms`, a 30-sample estimation window and
//! `α = 10`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{ControllerKind, ControllerSpec, DerivativeMode, EstimatorKind, GainSet};
use crate::equivalence::ClassicGains;
use crate::error::{invalid, Error, Result};
use crate::estimation::{ModelOrder, UltraLocalConfig};
use crate::metrics::{compute_metrics, Metrics, MetricsConfig};
use crate::plant::{AeroSurrogateParams, DisturbanceEvent, Plant, PlantSpec};
use crate::scalar::Real;
use crate::signal::{NoiseModel, ReferenceTrajectory, SetpointSegment, TimeGrid};
use crate::simulation::{simulate, SimOutcome};

pub const CATALOG_ALPHA: f64 = 10.0;
pub const CATALOG_KP: f64 = 25.0;
pub const CATALOG_KD: f64 = 10.0;
pub const CATALOG_KI_SWEEP: [f64; 3] = [0.001, 0.01, 0.1];
pub const CATALOG_SAMPLING_PERIOD: f64 = 0.01;
pub const CATALOG_WINDOW: usize = 30;
pub const CATALOG_DISTURBANCE_START: f64 = 15.0;

pub const DISTURBANCE_DURATION: f64 = 5.0;
pub const DISTURBANCE_TORQUE: f64 = 0.05;
/// Command limits that keep both mixed voltages inside ±24 V.
pub const U_LIMIT: f64 = 14.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec<T> {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub plant: PlantSpec<T>,
    pub reference: ReferenceTrajectory<T>,
    #[serde(default)]
    pub disturbances: Vec<DisturbanceEvent<T>>,
    pub noise: NoiseModel<T>,
    pub controller: ControllerSpec<T>,
    pub grid: TimeGrid<T>,
    pub initial_state: Vec<T>,
}

impl<T: Real> ScenarioSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(invalid("scenario id must not be empty"));
        }
        self.plant.validate()?;
        self.reference.validate()?;
        self.noise.validate()?;
        self.controller.validate()?;
        self.grid.validate()?;
        self.disturbances.iter().try_for_each(DisturbanceEvent::validate)?;
        if self.initial_state.len() != self.plant.dim() {
            return Err(invalid(format!(
                "initial state has {} entries, plant expects {}",
                self.initial_state.len(),
                self.plant.dim()
            )));
        }
        if (self.grid.h - self.controller.model.h).abs().as_f64() > 1e-12 {
            return Err(invalid("controller sampling period differs from the grid"));
        }
        Ok(())
    }

    pub fn with_controller(&self, controller: ControllerSpec<T>) -> Self {
        Self {
            controller,
            ..self.clone()
        }
    }

    pub fn run(&self) -> Result<SimOutcome<T>> {
        simulate(self)
    }
}

fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

fn seg<T: Real>(start: f64, value: f64, transition: f64) -> SetpointSegment<T> {
    SetpointSegment {
        start: lit(start),
        value: lit(value),
        transition: lit(transition),
    }
}

/// Two smoothed steps `0 → 0.5 → 0` rad.
pub fn simple_reference<T: Real>() -> ReferenceTrajectory<T> {
    ReferenceTrajectory {
        initial: T::zero(),
        segments: vec![seg(1.0, 0.5, 2.0), seg(25.0, 0.0, 2.0)],
    }
}

/// Five setpoints of alternating sign.
pub fn complex_reference<T: Real>() -> ReferenceTrajectory<T> {
    ReferenceTrajectory {
        initial: T::zero(),
        segments: vec![
            seg(1.0, 0.4, 1.5),
            seg(7.0, -0.3, 1.5),
            seg(13.0, 0.5, 1.5),
            seg(19.0, -0.2, 1.5),
            seg(25.0, 0.0, 1.5),
        ],
    }
}

fn catalog_model<T: Real>(order: ModelOrder) -> UltraLocalConfig<T> {
    UltraLocalConfig {
        order,
        alpha: lit(CATALOG_ALPHA),
        window: CATALOG_WINDOW,
        h: lit(CATALOG_SAMPLING_PERIOD),
    }
}

fn intelligent<T: Real>(kind: ControllerKind, gains: GainSet<T>, order: ModelOrder) -> ControllerSpec<T> {
    ControllerSpec {
        kind,
        gains,
        classic: ClassicGains::default(),
        model: catalog_model(order),
        derivative: DerivativeMode::Riachy,
        estimator: EstimatorKind::Window,
        u_min: lit(-U_LIMIT),
        u_max: lit(U_LIMIT),
        reset_on_setpoint_change: true,
    }
}

/// iP with `α = 10`, `K_P = 25` on an order-1 model.
pub fn catalog_ip<T: Real>() -> ControllerSpec<T> {
    let gains = GainSet { kp: lit(CATALOG_KP), ki: T::zero(), kd: T::zero() };
    intelligent(ControllerKind::IP, gains, ModelOrder::First)
}

/// iPD with `α = 10`, `K_P = 25`, `K_D = 10`.
pub fn catalog_ipd<T: Real>() -> ControllerSpec<T> {
    let gains = GainSet { kp: lit(CATALOG_KP), ki: T::zero(), kd: lit(CATALOG_KD) };
    intelligent(ControllerKind::IPD, gains, ModelOrder::Second)
}

pub fn catalog_ipid<T: Real>(ki: T) -> ControllerSpec<T> {
    let gains = GainSet { kp: lit(CATALOG_KP), ki, kd: lit(CATALOG_KD) };
    intelligent(ControllerKind::IPID, gains, ModelOrder::Second)
}

fn base<T: Real>(id: &str, description: &str, reference: ReferenceTrajectory<T>, duration: f64, controller: ControllerSpec<T>) -> ScenarioSpec<T> {
    ScenarioSpec {
        id: id.to_string(),
        description: description.to_string(),
        plant: PlantSpec::Aero(AeroSurrogateParams::default()),
        reference,
        disturbances: Vec::new(),
        noise: NoiseModel::encoder(0),
        controller,
        grid: TimeGrid {
            h: lit(CATALOG_SAMPLING_PERIOD),
            substeps: 10,
            duration: lit(duration),
        },
        initial_state: vec![T::zero(), T::zero()],
    }
}

fn disturbance<T: Real>() -> DisturbanceEvent<T> {
    DisturbanceEvent {
        start: lit(CATALOG_DISTURBANCE_START),
        duration: lit(DISTURBANCE_DURATION),
        torque: lit(DISTURBANCE_TORQUE),
    }
}

/// The nine built-in scenarios, ids `"1"` to `"9"`.
pub fn builtin_scenarios<T: Real>() -> Vec<ScenarioSpec<T>> {
    let mut out = vec![
        base("1", "iP, simple reference", simple_reference(), 30.0, catalog_ip()),
        base("2", "iP, complex reference", complex_reference(), 31.0, catalog_ip()),
        base("3", "iP, simple reference, torque disturbance at 15 s", simple_reference(), 30.0, catalog_ip()),
        base("4", "iPD, simple reference", simple_reference(), 30.0, catalog_ipd()),
        base("5", "iPD, complex reference", complex_reference(), 31.0, catalog_ipd()),
        base("6", "iPD, simple reference, torque disturbance at 15 s", simple_reference(), 30.0, catalog_ipd()),
    ];
    out[2].disturbances.push(disturbance());
    out[5].disturbances.push(disturbance());
    for (i, ki) in CATALOG_KI_SWEEP.iter().enumerate() {
        let id = (7 + i).to_string();
        let desc = format!("iPID, simple reference, K_I = {ki}");
        out.push(base(&id, &desc, simple_reference(), 30.0, catalog_ipid(lit(*ki))));
    }
    out
}

pub fn builtin_scenario<T: Real>(id: &str) -> Result<ScenarioSpec<T>> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::UnknownScenario(id.to_string()))
}

pub fn builtin_ids() -> Vec<String> {
    builtin_scenarios::<f64>().into_iter().map(|s| s.id).collect()
}

/// Shared plant and reference with a list of labelled controllers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFamily<T> {
    pub name: String,
    pub base: ScenarioSpec<T>,
    pub controllers: Vec<(String, ControllerSpec<T>)>,
}

/// iP of scenario 1 against the iPD of scenario 4 on the simple reference.
pub fn family_ip_vs_ipd<T: Real>() -> ScenarioFamily<T> {
    ScenarioFamily {
        name: "ip-vs-ipd".into(),
        base: builtin_scenario("1").expect("builtin"),
        controllers: vec![("iP".into(), catalog_ip()), ("iPD".into(), catalog_ipd())],
    }
}

/// iPD baseline followed by iPIDs with `K_I ∈ {0.001, 0.01, 0.1}·scale`.
pub fn family_ipid_sweep<T: Real>(ki_scale: T) -> ScenarioFamily<T> {
    let mut controllers = vec![("iPD".to_string(), catalog_ipd())];
    for ki in CATALOG_KI_SWEEP {
        let ki = lit::<T>(ki) * ki_scale;
        controllers.push((format!("iPID K_I={ki}"), catalog_ipid(ki)));
    }
    ScenarioFamily {
        name: "ipid-sweep".into(),
        base: builtin_scenario("4").expect("builtin"),
        controllers,
    }
}

/// Riachy-transformed iPD against the backward-difference iPD.
pub fn family_derivative_modes<T: Real>() -> ScenarioFamily<T> {
    let mut bd = catalog_ipd();
    bd.derivative = DerivativeMode::BackwardDifference;
    ScenarioFamily {
        name: "derivative-modes".into(),
        base: builtin_scenario("4").expect("builtin"),
        controllers: vec![("iPD riachy".into(), catalog_ipd()), ("iPD backward-difference".into(), bd)],
    }
}

pub const FAMILY_NAMES: [&str; 3] = ["ip-vs-ipd", "ipid-sweep", "derivative-modes"];

pub fn family_by_name<T: Real>(name: &str, ki_scale: T) -> Option<ScenarioFamily<T>> {
    match name {
        "ip-vs-ipd" => Some(family_ip_vs_ipd()),
        "ipid-sweep" => Some(family_ipid_sweep(ki_scale)),
        "derivative-modes" => Some(family_derivative_modes()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow<T> {
    pub label: String,
    pub kind: ControllerKind,
    pub gains: GainSet<T>,
    pub metrics: Metrics<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport<T> {
    pub rows: Vec<ComparisonRow<T>>,
    /// Whether the oscillation index is non-decreasing in `K_I` over the
    /// iPD/iPID rows; absent when fewer than two distinct `K_I` values appear.
    pub ki_oscillation_monotone: Option<bool>,
}

impl<T: Real> ComparisonReport<T> {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from(
            "| controller | K_P | K_I | K_D | rmse | iae | overshoot | settling (s) | oscillation | diverged |\n\
             |---|---|---|---|---|---|---|---|---|---|\n",
        );
        for r in &self.rows {
            let m = &r.metrics;
            let settle = m.settling_time.map_or("-".to_string(), |v| format!("{:.3}", v.as_f64()));
            s.push_str(&format!(
                "| {} | {} | {} | {} | {:.5} | {:.5} | {:.4} | {} | {} | {} |\n",
                r.label,
                r.gains.kp,
                r.gains.ki,
                r.gains.kd,
                m.rmse.as_f64(),
                m.iae.as_f64(),
                m.max_overshoot.as_f64(),
                settle,
                m.oscillation_index,
                if m.diverged { "yes" } else { "no" },
            ));
        }
        if let Some(mono) = self.ki_oscillation_monotone {
            s.push_str(&format!(
                "\nOscillation index non-decreasing in K_I: {}\n",
                if mono { "yes" } else { "no" }
            ));
        }
        s
    }
}

pub struct ComparisonRun<T> {
    pub report: ComparisonReport<T>,
    pub outcomes: Vec<(String, SimOutcome<T>)>,
}

fn ki_monotone<T: Real>(rows: &[ComparisonRow<T>]) -> Option<bool> {
    let mut pts: Vec<(T, usize)> = rows
        .iter()
        .filter(|r| matches!(r.kind, ControllerKind::IPD | ControllerKind::IPID))
        .map(|r| (r.gains.ki, r.metrics.oscillation_index))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let distinct = pts.windows(2).any(|w| w[0].0 != w[1].0);
    distinct.then(|| pts.windows(2).all(|w| w[0].1 <= w[1].1))
}

/// Runs every controller against the shared base scenario, in parallel.
pub fn compare_controllers<T: Real>(
    base: &ScenarioSpec<T>,
    controllers: &[(String, ControllerSpec<T>)],
    cfg: &MetricsConfig<T>,
) -> Result<ComparisonRun<T>> {
    let results: Vec<Result<(ComparisonRow<T>, SimOutcome<T>)>> = controllers
        .par_iter()
        .map(|(label, spec)| {
            let scenario = base.with_controller(spec.clone());
            let outcome = simulate(&scenario)?;
            let metrics = compute_metrics(&outcome, &scenario, cfg);
            Ok((
                ComparisonRow {
                    label: label.clone(),
                    kind: spec.kind,
                    gains: spec.gains,
                    metrics,
                },
                outcome,
            ))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        let (row, outcome) = r?;
        outcomes.push((row.label.clone(), outcome));
        rows.push(row);
    }
    let ki_oscillation_monotone = ki_monotone(&rows);
    Ok(ComparisonRun {
        report: ComparisonReport { rows, ki_oscillation_monotone },
        outcomes,
    })
}

/// Simulates many scenarios concurrently; output order follows the input.
pub fn run_batch<T: Real>(scenarios: &[ScenarioSpec<T>]) -> Vec<Result<SimOutcome<T>>> {
    scenarios.par_iter().map(simulate).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_matches_experiment_constants() {
        let all = builtin_scenarios::<f64>();
        assert_eq!(all.len(), 9);
        let ids: Vec<_> = all.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["1", "2", "3", "4", "5", "6", "7", "8", "9"]);
        for s in &all {
            s.validate().unwrap();
            assert_eq!(s.grid.h, 0.01);
            assert_eq!(s.controller.model.window, 30);
            assert_eq!(s.controller.model.alpha, 10.0);
            assert_eq!(s.controller.gains.kp, 25.0);
        }
        for s in &all[..3] {
            assert_eq!(s.controller.kind, ControllerKind::IP);
            assert_eq!(s.controller.model.order, ModelOrder::First);
        }
        let s4 = &all[3];
        assert_eq!(s4.controller.kind, ControllerKind::IPD);
        assert_eq!((s4.controller.gains.kp, s4.controller.gains.ki, s4.controller.gains.kd), (25.0, 0.0, 10.0));
        let kis: Vec<f64> = all[6..].iter().map(|s| s.controller.gains.ki).collect();
        assert_eq!(kis, [0.001, 0.01, 0.1]);
        assert!(all[6..].iter().all(|s| s.controller.gains.kd == 10.0));
        for s in [&all[2], &all[5]] {
            assert_eq!(s.disturbances.len(), 1);
            assert_eq!(s.disturbances[0].start, 15.0);
        }
        assert!(all.iter().filter(|s| !s.disturbances.is_empty()).count() == 2);
    }

    #[test]
    fn unknown_id() {
        assert_eq!(builtin_scenario::<f64>("nope"), Err(Error::UnknownScenario("nope".into())));
    }

    #[test]
    fn empty_comparison() {
        let base = builtin_scenario::<f64>("4").unwrap();
        let run = compare_controllers(&base, &[], &MetricsConfig::default()).unwrap();
        assert!(run.report.rows.is_empty());
        assert_eq!(run.report.ki_oscillation_monotone, None);
    }

    #[test]
    fn grid_controller_period_mismatch() {
        let mut s = builtin_scenario::<f64>("4").unwrap();
        s.controller.model.h = 0.02;
        assert!(s.validate().is_err());
    }
}
