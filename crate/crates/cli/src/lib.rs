//! Command-line driver for the p-spin toolkit: `solve`, `phase`, `chaos`,
//! `simulate` and `verify`, each reading one TOML experiment config.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use pspin_core::Error;

mod commands;
pub mod config;
pub mod output;

pub use commands::{run_checks, Check, Status};
pub use config::{Config, ConfigError};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for invalid input: bad config, failed precondition, caps.
pub const EXIT_INVALID: i32 = 1;
/// Exit status for numerical failure or a failed invariant.
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Failed(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => EXIT_FAILED,
            _ => EXIT_INVALID,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NotConverged { .. } | Error::Inconsistent(_) => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pspin", version, about = "Spherical mixed p-spin ground states: variational solver and Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; relative output paths in the config resolve here.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    /// Shift added to the first Monte Carlo seed.
    #[arg(long = "seed-offset", global = true, value_name = "J", default_value_t = 0)]
    seed_offset: u64,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Minimize the zero-temperature functional and write its certificate.
    Solve,
    /// Classify the phase; optionally sweep the finite-temperature solution.
    Phase,
    /// Predicted overlap u_t of coupled ground states and the constant chi.
    Chaos,
    /// Run the configured Monte Carlo experiment.
    Simulate,
    /// Run the invariant suite and print a pass/fail table.
    Verify,
}

pub struct Run {
    pub config: Config,
    pub outputs: output::Outputs,
    pub seed_offset: u64,
}

/// Parse arguments, run the subcommand and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let Some(path) = cli.config.clone() else {
        eprintln!("error: --config PATH is required");
        return EXIT_INVALID;
    };
    let config = match Config::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_INVALID;
        }
    };
    let run = Run { config, outputs: output::Outputs::new(cli.out.as_deref(), &path), seed_offset: cli.seed_offset };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} threads: {e}", cli.threads.unwrap_or(0));
            return EXIT_INVALID;
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Solve => commands::solve(&run),
        Command::Phase => commands::phase(&run),
        Command::Chaos => commands::chaos(&run),
        Command::Simulate => commands::simulate(&run),
        Command::Verify => commands::verify(&run),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
