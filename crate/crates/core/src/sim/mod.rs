//! Scenario configuration, the closed-loop harness and experiment sweeps.

pub mod config;
pub mod run;
pub mod sweep;

pub use config::{Controller, Layout, ScenarioConfig};
pub use run::{run_scenario, RunMetrics, SafetyRecord, Simulation, TraceSeries};
pub use sweep::{
    compare_controllers, summarize_compare, summarize_safety, sweep_safety, CompareRow, SafetyRow, Summary,
};
