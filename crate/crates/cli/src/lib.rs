//! Command-line front end for the tendon-driven continuum robot model.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
pub mod output;
pub mod scenario;

pub use scenario::ScenarioFile;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Config {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
            _ => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tdcr-fsw",
    version,
    about = "Static model and force-space workspace of a tendon-driven continuum robot"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the equilibrium for the scenario's `forces`.
    Solve(CommonArgs),
    /// Sample the reachable workspace with random tensions.
    Sample(CommonArgs),
    /// Search the tensions that push the tip farthest from the base.
    Optimize(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the scenario's sampling and GA seeds.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 picks the number of cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Print the resolved scenario as TOML and exit.
    #[arg(long)]
    pub dump_config: bool,
}

/// Runs a parsed command and returns its exit code.
pub fn run(cli: Cli) -> u8 {
    let (args, result) = match &cli.command {
        Command::Solve(a) => (a, dispatch(a, commands::solve)),
        Command::Sample(a) => (a, dispatch(a, commands::sample)),
        Command::Optimize(a) => (a, dispatch(a, commands::optimize)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match e {
                CliError::NotConverged(_) => {
                    eprintln!(
                        "tdcr-fsw: not converged: {e} (outputs in {})",
                        args.out.display()
                    )
                }
                _ => eprintln!("tdcr-fsw: {e}"),
            }
            e.exit_code()
        }
    }
}

fn dispatch(
    args: &CommonArgs,
    command: fn(&ScenarioFile, &CommonArgs) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut scenario = ScenarioFile::load(&args.config)?;
    if let Some(seed) = args.seed {
        scenario.apply_seed(seed);
    }
    if args.dump_config {
        print!("{}", scenario.to_toml());
        return Ok(());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", args.jobs)))?;
    pool.install(|| command(&scenario, args))
}
