//! `purifylab`: validation suites, error sweeps, spectral diagnostics and
//! estimation-scaling runs for random-channel purification.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{CommandKind, CommonArgs, Format, RunConfig, SEED_ENV};

#[derive(Debug, Parser)]
#[command(name = "purifylab", version, about = "Purification error of random quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare Monte Carlo estimates against closed forms; exit 1 on any failure.
    Validate(CommonArgs),
    /// Average error of each strategy over a range of environment dimensions.
    Sweep(CommonArgs),
    /// Pooled eigenvalue histogram of d_O·C against the limit law.
    Spectrum(CommonArgs),
    /// Error of the estimate-and-purify strategy against the copy budget.
    TomoScaling(CommonArgs),
    /// Evaluate JSON golden fixtures (the bundled set by default).
    Fixtures {
        path: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List each reproduced formula and the operation that owns it.
    Index {
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(anyhow::Error),
}

fn run_monte_carlo(kind: CommandKind, args: &CommonArgs) -> Result<bool, Failure> {
    let cfg = RunConfig::resolve(kind, args, std::env::var(SEED_ENV).ok()).map_err(Failure::Usage)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .context("starting worker pool")
        .map_err(Failure::Usage)?;
    let run = pool.install(|| match kind {
        CommandKind::Validate => commands::validate(&cfg),
        CommandKind::Sweep => commands::sweep(&cfg),
        CommandKind::Spectrum => commands::spectrum(&cfg),
        CommandKind::TomoScaling => commands::tomo_scaling(&cfg),
    });
    run.map_err(Failure::Usage)
}

fn dispatch(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Validate(a) => run_monte_carlo(CommandKind::Validate, &a),
        Command::Sweep(a) => run_monte_carlo(CommandKind::Sweep, &a),
        Command::Spectrum(a) => run_monte_carlo(CommandKind::Spectrum, &a),
        Command::TomoScaling(a) => run_monte_carlo(CommandKind::TomoScaling, &a),
        Command::Fixtures { path, format, out } => {
            let text = match &path {
                Some(p) => std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))
                    .map_err(Failure::Usage)?,
                None => commands::DEFAULT_FIXTURES.to_string(),
            };
            let (report, passed) = commands::fixtures(&text, format).map_err(Failure::Usage)?;
            output::emit(out.as_deref(), &report).map_err(Failure::Usage)?;
            Ok(passed)
        }
        Command::Index { format, out } => {
            let text = commands::index(format).map_err(Failure::Usage)?;
            output::emit(out.as_deref(), &text).map_err(Failure::Usage)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
