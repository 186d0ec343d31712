//! Command-line front end: an expression language for units and series,
//! and subcommands that print JSON reports.

pub mod commands;
pub mod normalize;
pub mod parser;

pub use commands::{run, run_args, Cli, CliError, Outcome};
