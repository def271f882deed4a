//! Scenario files, result serialization, figures and the commands of the
//! `lqr-bridge` binary.

pub mod commands;
pub mod error;
pub mod outputs;
pub mod plot;
pub mod scenario_file;

pub use error::{CliError, Result};
pub use scenario_file::{load_scenario, ScenarioFile};
