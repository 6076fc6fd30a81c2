//! Model-free control with ultra-local models.
//!
//! The plant is never identified. Over a short sliding window the output is
//! assumed to obey `y⁽ⁿ⁾ = F + αu`, the lumped term `F` is re-estimated at
//! every sample from an algebraic integral of past measurements and inputs,
//! and an intelligent controller (iP, iPD, iPID) cancels it. The crate also
//! contains the mapping to classic PI/PID gains, a Routh–Hurwitz gate, a
//! surrogate of the half-quadrotor test bench and a scenario/metrics harness.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! `f64`, which is what the catalog and CLI use.

// NaN-rejecting `!(a > b)` checks are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod control;
pub mod equivalence;
pub mod error;
pub mod estimation;
pub mod metrics;
pub mod plant;
pub mod scalar;
pub mod scenario;
pub mod signal;
pub mod simulation;

pub use control::{ControlStep, Controller, ControllerKind, ControllerSpec, DerivativeMode, EstimatorKind, GainSet};
pub use equivalence::{hurwitz_cubic, pi_from_ip, pid_from_ipd, ClassicGains, StabilityVerdict};
pub use error::{Error, Result};
pub use estimation::{FirKernels, ModelOrder, RiachyState, UltraLocalConfig};
pub use metrics::{compute_metrics, Metrics, MetricsConfig};
pub use plant::{AeroSurrogate, AeroSurrogateParams, DisturbanceEvent, DoubleIntegrator, Plant, PlantSpec};
pub use scalar::Real;
pub use scenario::{builtin_scenario, builtin_scenarios, compare_controllers, ScenarioSpec};
pub use signal::{NoiseModel, ReferenceTrajectory, SampleWindow, SetpointSegment, TimeGrid};
pub use simulation::{simulate, SimOutcome, TraceRecord};

pub type Scenario = ScenarioSpec<f64>;
pub type Scenario32 = ScenarioSpec<f32>;
pub type SampleWindow64 = SampleWindow<f64>;
pub type SampleWindow32 = SampleWindow<f32>;
pub type FirKernels64 = FirKernels<f64>;
pub type FirKernels32 = FirKernels<f32>;
pub type Controller64 = Controller<f64>;
pub type Controller32 = Controller<f32>;
pub type Metrics64 = Metrics<f64>;
pub type Trace64 = Vec<TraceRecord<f64>>;
pub type Outcome64 = SimOutcome<f64>;
