//! Experiment harness for modulo FRI sampling: config loading, scenario
//! runner and result writers.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{AmplitudeMode, ExperimentConfig, PulseChoice, Scenario};
pub use error::HarnessError;
pub use experiment::{run_experiment, ExperimentResult, SummaryRow, TrialRow};
pub use output::Format;
