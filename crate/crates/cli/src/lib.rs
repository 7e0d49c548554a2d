//! Command-line front end: CSV ingestion, config files, and the `fit`,
//! `simulate` and `cov-select` commands.
//!
//! Input biomarkers are expected to be normalized already (log scale etc.);
//! `fit` only standardizes each column to mean 0 and variance 1.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod output;

pub use error::{CliError, CliResult};

use args::{Cli, Command};

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::CovSelect(a) => commands::cov_select(a),
    }
}
