//! Scenario files, validation and artifact writing for the `qcs` binary.

pub mod config;
pub mod runner;
pub mod validate;

pub use config::ScenarioConfig;
pub use runner::{run_scenario, RunError, Status};
pub use validate::{validate_config, Diagnostic, Severity};
