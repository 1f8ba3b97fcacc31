//! Simulation core for a desk-scale geomagnetic hardware-in-the-loop testbed.
//!
//! * [`magnetics`] — Biot–Savart fields of straight segments, square loops and
//!   square Helmholtz pairs.
//! * [`coilopt`] — side/spacing optimisation and uniform-region extents.
//! * [`control`] — convex combination controller and LMS/SVS/ATLMS baselines.
//! * [`plant`] — voltage→field fit, magnetometer and disturbance models.
//! * [`experiments`] — system-identification and step-response harnesses.
//!
//! Units are SI inside `magnetics`/`coilopt`; the plant boundary speaks nT.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coilopt;
pub mod control;
pub mod experiments;
pub mod magnetics;
pub mod plant;
pub mod presets;

pub use coilopt::{OptimalityResult, UniformRegion};
pub use control::{ConvexParams, ConvexState, Method, MethodParams, StepInput, StepOutput};
pub use experiments::{MetricsReport, StepScenario, SysIdScenario};
pub use magnetics::{FieldVector, HelmholtzPair, Point, Segment, SquareLoop};
pub use plant::{DisturbanceSpec, PlantModel, SensorSpec, TargetProfile};
