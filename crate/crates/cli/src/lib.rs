//! Config-driven experiment harness over `pwapprox-core`.
//!
//! Settings resolve in three layers: built-in defaults, then the JSON config
//! file (`--config`), then command-line flags (`--grid`, `--out`,
//! `--inclusive-limit`, `--seed`). The subcommand fixes the experiment kind.

pub mod config;
pub mod experiments;
pub mod report;

use anyhow::{Context, Result};

pub use config::{resolve, Experiment, ExperimentConfig, Overrides};
pub use experiments::run;

pub const THREADS_ENV: &str = "PWAPPROX_THREADS";

/// Worker count from `PWAPPROX_THREADS`; 1 when unset.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
            anyhow::ensure!(n > 0, "{THREADS_ENV} must be a positive integer, got 0");
            Ok(n)
        }
        Err(_) => Ok(1),
    }
}

/// Runs the experiment on a dedicated pool of `threads` workers.
pub fn run_with_threads(experiment: Experiment, cfg: &ExperimentConfig, threads: usize) -> Result<String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("cannot start worker pool")?;
    pool.install(|| run(experiment, cfg))
}
