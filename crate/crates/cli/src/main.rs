//! `upqrng` command-line tool.
//!
//! Exit codes: 0 success, 1 statistical battery failed, 2 nothing certified,
//! 3 input error, 4 selftest failure.

mod commands;
mod config;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::{FileConfig, Overrides, Settings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] upqrng::Error),
    #[error("{0}")]
    NothingCertified(String),
    #[error("selftest failed ({0} check(s))")]
    Selftest(usize),
    #[error("statistical battery failed")]
    BatteryFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::BatteryFailed => 1,
            CliError::NothingCertified(_) | CliError::Core(upqrng::Error::NothingCertified(_)) => 2,
            CliError::Input(_) | CliError::Core(_) => 3,
            CliError::Selftest(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "upqrng", version, about = "Uncertainty-principle certified QRNG: simulate, certify, extract")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Source model: qubit, ququart, mixed, tomo-p1, tomo-p995, bloch:x,y,z or probs:x0,..;z0,..
    #[arg(long, global = true)]
    model: Option<String>,

    /// Number of measurements.
    #[arg(long = "m", global = true)]
    m: Option<u64>,

    /// Comma-separated list of m values for sweeps.
    #[arg(long, global = true, value_delimiter = ',')]
    m_grid: Option<Vec<u64>>,

    /// Monte Carlo repetitions per grid point.
    #[arg(long, global = true)]
    reps: Option<usize>,

    /// Seed of the pseudo-random generator.
    #[arg(long, global = true)]
    rng_seed: Option<u64>,

    /// Seed-bit file (simulate: schedule seed; extract: Toeplitz seed).
    #[arg(long, global = true)]
    seed_file: Option<PathBuf>,

    /// Security parameter: the output is shortened by 2·EPS bits.
    #[arg(long = "epsilon-exp", global = true)]
    epsilon_exp: Option<u32>,

    /// Output path (stdout for text outputs when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for Monte Carlo commands (default: $UPQRNG_WORKERS, then CPU count).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a run and write the run container.
    Simulate,
    /// Certify a run from its control counts.
    Certify { run: PathBuf },
    /// Hash a run's generation outcomes down to the certified length.
    Extract { run: PathBuf, certificate: PathBuf },
    /// Monte Carlo rate curve over an m grid (CSV).
    Sweep,
    /// Rate curves of the control-basis bound vs the tomographic bound (CSV).
    CompareTomo,
    /// Run the statistical battery on a bit file or a run's raw outcomes (CSV).
    Stats { input: PathBuf },
    /// Run the built-in invariant checks.
    Selftest,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        model: cli.model,
        m: cli.m,
        rng_seed: cli.rng_seed,
        reps: cli.reps,
        m_grid: cli.m_grid,
        epsilon_exp: cli.epsilon_exp,
        workers: cli.workers,
        seed_file: cli.seed_file,
        out: cli.out,
    };
    let settings = Settings::resolve(file, flags)?;
    match cli.command {
        Command::Simulate => commands::simulate(&settings),
        Command::Certify { run } => commands::certify(&settings, &run),
        Command::Extract { run, certificate } => commands::extract(&settings, &run, &certificate),
        Command::Sweep => commands::sweep(&settings),
        Command::CompareTomo => commands::compare_tomo(&settings),
        Command::Stats { input } => commands::stats(&settings, &input),
        Command::Selftest => selftest::run(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("upqrng: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
