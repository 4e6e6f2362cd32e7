//! Batch harness for scenario-based risk statistics.
//!
//! One TOML config describes the space, the statistic pair, the suites to
//! run and their budgets; scenario vectors arrive as CSV or JSON files;
//! the output is a deterministic JSON report plus an optional aligned
//! table. See the `riskstat` binary for the command-line surface.

pub mod config;
pub mod io;
pub mod run;
pub mod table;

pub use config::{ConfigError, RunConfig, SuiteName};
pub use io::{load_scenarios, Format, LoadError};
pub use run::{exit_code, run, RunReport, Stages};
