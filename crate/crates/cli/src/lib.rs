//! Configuration and subcommands of the `maxwell-hdg` command-line tool.

pub mod commands;
pub mod config;

pub use commands::{simulate, CliError, Options, RunOutcome};
pub use config::RunConfig;
