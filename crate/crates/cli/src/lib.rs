//! Config-driven runner for the suspension optimization cases.

pub mod compare;
pub mod config;
pub mod error;
pub mod report;
pub mod scenario;

pub use compare::compare_runs;
pub use config::{LoadedConfig, RunConfig};
pub use error::{CliError, Result};
pub use scenario::{run_scenario, RunOptions, RunSummary};
