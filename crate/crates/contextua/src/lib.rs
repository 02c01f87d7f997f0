//! Scenario files, bundled catalogs and the `contextua` command line.

pub mod bundled;
pub mod commands;
pub mod expr;
pub mod report;
pub mod scenario;

pub use commands::{render, run, Format, Options, RunError, COMMANDS};
pub use report::RunReport;
pub use scenario::{parse_scenario, Scenario, ScenarioError};
