//! Command-line front end for `keydist`: capacity curves as CSV, reports and
//! simulation runs as JSON-lines records.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

pub use args::Cli;
pub use commands::execute;
pub use error::{CliError, CliResult};
