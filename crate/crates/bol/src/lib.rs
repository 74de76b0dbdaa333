//! Command-line driver for `bol-core`: function specs, grid files, layered
//! configuration and versioned JSON reports.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod gridio;
pub mod pool;
pub mod report;
pub mod spec;

pub use cli::{run, Outcome};
pub use error::{CliError, CliResult};
