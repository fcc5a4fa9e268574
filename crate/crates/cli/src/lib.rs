//! Library side of the `riskauction` command-line tool.

pub mod commands;
pub mod files;
pub mod simulate;

pub use commands::{CliError, Outcome};
