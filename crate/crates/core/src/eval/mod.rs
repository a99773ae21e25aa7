//! Synthetic scenarios and ranking-quality experiments.

pub mod experiment;
pub mod metrics;
pub mod scenario;

pub use experiment::{run_experiment, EvalReport, ReportRow};
pub use scenario::{build_scenario, default_targets, ScenarioSpec, ViewSpec};
