//! Command-line front end: scenario loading, report rendering and the
//! `algebroid` subcommands.

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

pub use commands::{run, Cli, Status};
pub use error::{CliError, CliResult};
