//! Wildfire front tracking and probabilistically safe UAV coordination.
//!
//! The crate is organised bottom-up:
//!
//! * [`fire`] simulates firefront points under a simplified elliptical
//!   spread model (stationary, moving and moving-spreading cases).
//! * [`aekf`] tracks each front with an adaptive extended Kalman filter over
//!   the joint fire/UAV/weather state, including multi-step residual
//!   forecasting.
//! * [`bounds`] computes closed-form traverse-time upper bounds and the
//!   uncertainty residual ratio (URR) used as a safety certificate.
//! * [`routing`] builds Steiner-zone waypoints, MST tours and k-opt
//!   improvements.
//! * [`coordination`] runs the human-safety recruitment loop and the
//!   distributed coverage controller.
//! * [`gradient`] is the density-gradient baseline controller.
//! * [`sim`] wires everything into a deterministic closed-loop harness and
//!   the experiment sweeps.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aekf;
pub mod bounds;
pub mod coordination;
pub mod error;
pub mod fire;
pub mod geometry;
pub mod gradient;
pub mod rng;
pub mod routing;
pub mod sim;

pub use aekf::{Aekf, FilterConfig, FullState, ObservationVector, TrackEstimate};
pub use bounds::{BoundInputs, BoundResult, FleetParams, UrrMode};
pub use coordination::{FireTrack, HumanTeam, MissionPlan, UavAgent, UavMode};
pub use error::{Error, Result};
pub use fire::{EllipseParams, FireCase, FireFront, FireMap, WindFuel};
pub use geometry::Point;
pub use gradient::GradientConfig;
pub use sim::{run_scenario, Controller, RunMetrics, ScenarioConfig};

/// Identifier of a simulated firefront point; stable for the front's lifetime.
pub type FireId = u64;
