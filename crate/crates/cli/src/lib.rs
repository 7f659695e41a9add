//! Command-line front end for `erw-core`: moment tables, limits, Monte Carlo
//! runs, alpha sweeps and a self-verification report.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod verify;

pub use config::{ExperimentConfig, Overrides};

#[derive(Parser, Debug)]
#[command(
    name = "erw",
    version,
    about = "Elephant random walk: exact moments, limits and simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// First four moments of the limit Q (JSON).
    Limits,
    /// Exact moment table by recursion (CSV).
    Exact,
    /// Monte Carlo scaled moments against theory (CSV).
    Simulate,
    /// Run the invariant suites and print a JSON report.
    Verify,
    /// Limit moments over an alpha grid (CSV).
    Sweep,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] erw_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("verification failed: {0} failing case(s)")]
    Verification(usize),
}

impl CliError {
    /// 1 for failed verification, 2 for anything wrong with the request.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            _ => 2,
        }
    }
}

/// Runs one command and writes its output. The report of a failed `verify`
/// is written before the error is returned.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = ExperimentConfig::load(&cli.flags)?;
    let work = || -> Result<(), CliError> {
        match cli.command {
            Command::Limits => emit(&config, &commands::limits(&config)?),
            Command::Exact => emit(&config, &commands::exact(&config)?),
            Command::Simulate => emit(&config, &commands::simulate(&config)?),
            Command::Sweep => emit(&config, &commands::sweep(&config)?),
            Command::Verify => {
                let report = verify::run_all(&config);
                let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
                emit(&config, &text)?;
                match report.failures() {
                    0 => Ok(()),
                    k => Err(CliError::Verification(k)),
                }
            }
        }
    };
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn emit(config: &ExperimentConfig, text: &str) -> Result<(), CliError> {
    match &config.out {
        Some(path) => fs::write(path, text).map_err(|source| io_err(path, source)),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn io_err(path: &Path, source: io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}
