//! Command-line driver: configuration, subcommands and the verification report.
//!
//! Exit codes: `0` success, `1` a check failed or a computation did not
//! converge, `2` bad configuration, usage or a parameter outside the
//! supported domain.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use thiserror::Error;

pub mod cli;
pub mod commands;
pub mod config;
pub mod report;
pub mod verify;

pub use config::{resolve, ConfigError, Overrides, RunConfig, OUT_ENV};
pub use report::{Check, Report, Status};
pub use verify::{verify_all, verify_selected};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] schiffer::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use schiffer::Error as E;
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Library(E::Domain(_) | E::Precondition(_) | E::NoSignChange { .. }) => 2,
            CliError::Library(_) | CliError::Io(_) => 1,
        }
    }
}

/// Parse `argv`, run the subcommand and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match cli::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let env_out = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let result = resolve(&cli.global.overrides(), env_out)
        .map_err(CliError::from)
        .and_then(|cfg| commands::dispatch(&cli.command, &cfg));
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("schiffer: {e}");
            e.exit_code()
        }
    }
}
