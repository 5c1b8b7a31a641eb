use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use pwapprox_cli::{resolve, run_with_threads, thread_count, Experiment, Overrides};

/// Bandlimited signal and system approximation experiments.
#[derive(Parser)]
#[command(name = "pwapprox", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Spectral grid size; must be a power of two.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Output CSV path; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Sum dyadic stages up to 2^N instead of 2^N - 1.
    #[arg(long, global = true)]
    inclusive_limit: bool,

    /// Seed for the sampling sequence and random signals.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sup-error sweep of one approximation engine.
    Reconstruct,
    /// Sup-error sweep of both dyadic Walsh engines.
    WalshConverge,
    /// Adversarial-system worst case and kernel norms with log fits.
    Divergence,
    /// Dirichlet Lebesgue constants.
    Lebesgue,
    /// Finite-section Riesz bounds.
    Riesz,
    /// The adversarial transfer function as omega,re,im.
    ExportKernel,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Reconstruct => Experiment::Reconstruct,
            Command::WalshConverge => Experiment::WalshConverge,
            Command::Divergence => Experiment::Divergence,
            Command::Lebesgue => Experiment::Lebesgue,
            Command::Riesz => Experiment::Riesz,
            Command::ExportKernel => Experiment::ExportKernel,
        }
    }
}

fn main() -> ExitCode {
    match try_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn try_main() -> Result<()> {
    let cli = Cli::parse();
    let experiment = Experiment::from(cli.command);
    let overrides = Overrides {
        grid: cli.grid,
        out: cli.out,
        inclusive_limit: cli.inclusive_limit,
        seed: cli.seed,
    };
    let cfg = resolve(experiment, cli.config.as_deref(), &overrides)?;
    let csv = run_with_threads(experiment, &cfg, thread_count()?)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, csv).with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout().lock().write_all(csv.as_bytes())?,
    }
    Ok(())
}
