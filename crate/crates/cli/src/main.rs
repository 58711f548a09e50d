#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod cmd;
mod error;
mod observations;
mod output;
mod svg;

use error::{invalid, CliResult};
use output::Sink;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Plan per-group data collection from scaling-law fits.
#[derive(Debug, Parser)]
#[command(name = "allocplan", version)]
struct Cli {
    /// Random seed (default 0; pilot and logo fall back to their config seed)
    #[arg(long, global = true, env = "ALLOCPLAN_SEED")]
    seed: Option<u64>,
    /// Write outputs into this directory instead of stdout
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Output format where a command supports both
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit per-group scaling curves to an observations CSV
    Fit(cmd::fit::FitArgs),
    /// Compute the optimal allocation for given scaling parameters
    Optimize(cmd::optimize::OptimizeArgs),
    /// Run the pilot-sample workflow and compare strategies
    Pilot(cmd::pilot::PilotArgs),
    /// Generate synthetic risks or loss observations
    Simulate(cmd::simulate::SimulateArgs),
    /// Analyse a weighted-loss estimator and its variance-optimal pair
    Estimator(cmd::estimator::EstimatorArgs),
    /// Leave-one-group-out percent-change matrix
    Logo(cmd::logo::LogoArgs),
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("ALLOCPLAN_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| invalid(format!("ALLOCPLAN_THREADS='{raw}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| error::CliError::Internal(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let sink = Sink::new(cli.output_dir)?;
    let seed = cli.seed;
    let format = cli.format;
    match cli.command {
        Command::Fit(a) => cmd::fit::run(a, seed.unwrap_or(0), format, &sink),
        Command::Optimize(a) => cmd::optimize::run(a, format, &sink),
        Command::Pilot(a) => cmd::pilot::run(a, seed, format, &sink),
        Command::Simulate(a) => cmd::simulate::run(a, seed.unwrap_or(0), format, &sink),
        Command::Estimator(a) => cmd::estimator::run(a, seed.unwrap_or(0), format, &sink),
        Command::Logo(a) => cmd::logo::run(a, seed, format, &sink),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("allocplan: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
