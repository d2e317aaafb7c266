//! Scenario configuration, presets and the runner behind the command line.

mod config;
mod expr;
mod presets;
mod run;

pub use config::{DilationLadder, Family, FormSpec, GridSpec, InitialSpec, MonitorSpec, RandomSpec, ScenarioConfig};
pub use expr::{FieldExpr, Sampler};
pub use presets::{nearest_preset, preset, PRESETS};
pub use run::{dilation_ladder, evaluate, run_scenario, simulate, write_evaluation, Evaluation, RunOutcome};
