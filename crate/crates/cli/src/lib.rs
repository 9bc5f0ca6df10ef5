//! Command-line front end for the `tracegn` library: sample-size tables,
//! trace-coverage and extremal-envelope experiments, and DC-resistivity
//! inversions.
//!
//! Every subcommand writes into an output directory together with a
//! `manifest.txt` that records the resolved parameters; each output file
//! names that manifest.

pub mod args;
pub mod config;
mod coverage;
mod extremal;
mod invert;
mod output;
mod sample_size;

use std::fmt;

pub use args::{Cli, Command};
pub use invert::InversionSummary;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self { code: exit::USAGE, message: msg.into() }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Self { code: exit::CONFIG, message: msg.into() }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Self { code: exit::NUMERICAL, message: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<tracegn::Error> for CliError {
    fn from(e: tracegn::Error) -> Self {
        use tracegn::Error as E;
        let code = match e {
            E::Domain(_) => exit::USAGE,
            E::Config(_) | E::Parse(_) => exit::CONFIG,
            E::Numerical(_) | E::Dimension(_) => exit::NUMERICAL,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::config(format!("csv error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Run one subcommand. Returns the line to print on success.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::SampleSize(a) => sample_size::run(a),
        Command::TraceCoverage(a) => coverage::run(a),
        Command::ExtremalVerify(a) => extremal::run(a),
        Command::Invert(a) => invert::run(a).map(|s| s.line()),
    }
}
