//! Zero-order-hold closed loop: measure, corrupt, control, hold `u` over `h`.

use std::io::{self, Write};

use crate::control::Controller;
use crate::error::Result;
use crate::plant::{hold_and_integrate, Plant, Rk4};
use crate::scalar::Real;
use crate::scenario::ScenarioSpec;

/// States beyond this magnitude end the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// One row per controller tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord<T> {
    pub t: T,
    pub y_true: T,
    pub y_measured: T,
    pub y_ref: T,
    pub e: T,
    pub u: T,
    pub v1: T,
    pub v2: T,
    pub f_est: T,
    pub warming_up: bool,
    pub saturated: bool,
}

impl<T: Real> TraceRecord<T> {
    /// Error of the noiseless output; `e` is what the controller saw.
    pub fn tracking_error(&self) -> T {
        self.y_true - self.y_ref
    }
}

pub const TRACE_CSV_HEADER: &str = "t,y_true,y_measured,y_ref,e,u,v1,v2,F_est,warming_up,saturated";

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome<T> {
    pub trace: Vec<TraceRecord<T>>,
    pub diverged: bool,
}

pub fn simulate<T: Real>(scenario: &ScenarioSpec<T>) -> Result<SimOutcome<T>> {
    simulate_with(&scenario.plant, scenario)
}

/// Runs `scenario` against an explicit plant; the scenario's own plant spec is ignored.
pub fn simulate_with<T: Real, P: Plant<T> + ?Sized>(plant: &P, scenario: &ScenarioSpec<T>) -> Result<SimOutcome<T>> {
    scenario.validate()?;
    let grid = scenario.grid;
    let h = grid.h;
    let mut controller = Controller::new(scenario.controller.clone())?;
    let mut noise = scenario.noise.source();
    let mut x = scenario.initial_state.clone();
    let mut rk = Rk4::new(plant.dim());

    let change_ticks: Vec<usize> = scenario
        .reference
        .change_times()
        .map(|t| (t / h).round().to_usize().unwrap_or(usize::MAX))
        .collect();

    let steps = grid.steps();
    let mut trace = Vec::with_capacity(steps);
    let mut diverged = false;
    let limit = T::lit(DIVERGENCE_LIMIT);
    for k in 0..steps {
        let t = grid.time(k);
        let y_true = plant.output(&x);
        let y_measured = noise.corrupt(y_true);
        let r = scenario.reference.eval(t);
        let change = change_ticks.contains(&k);
        let step = controller.step(t, y_measured, r, change)?;
        let cmd = plant.actuate(step.u);
        trace.push(TraceRecord {
            t,
            y_true,
            y_measured,
            y_ref: r.y,
            e: step.e,
            u: step.u,
            v1: cmd.v1,
            v2: cmd.v2,
            f_est: step.f_est,
            warming_up: step.warming_up,
            saturated: step.saturated,
        });
        hold_and_integrate(plant, &mut rk, &mut x, &cmd, &scenario.disturbances, t, h, grid.substeps);
        if x.iter().any(|v| !v.is_finite() || v.abs() > limit) {
            diverged = true;
            break;
        }
    }
    Ok(SimOutcome { trace, diverged })
}

/// Writes the trace as CSV with the fixed column order of [`TRACE_CSV_HEADER`].
pub fn write_trace_csv<T: Real, W: Write>(mut out: W, trace: &[TraceRecord<T>]) -> io::Result<()> {
    writeln!(out, "{TRACE_CSV_HEADER}")?;
    for r in trace {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.y_true,
            r.y_measured,
            r.y_ref,
            r.e,
            r.u,
            r.v1,
            r.v2,
            r.f_est,
            r.warming_up as u8,
            r.saturated as u8
        )?;
    }
    Ok(())
}

pub fn trace_csv_string<T: Real>(trace: &[TraceRecord<T>]) -> String {
    let mut buf = Vec::with_capacity(trace.len() * 96);
    write_trace_csv(&mut buf, trace).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}
