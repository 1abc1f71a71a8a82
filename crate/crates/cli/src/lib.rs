//! Command-line driver for tokenflow: scenario files, runs, sweeps, CSV
//! output, reports and SVG charts.

pub mod chart;
pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod fsutil;
pub mod report;

pub use commands::{execute, Cli, Command};
pub use error::CliError;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "TOKENFLOW_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`] when it is set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::config(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("{THREADS_ENV}: {e}")))
}
