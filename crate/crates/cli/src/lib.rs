//! Command-line front end: scenario files in, text tables and CSV out.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when a model
//! precondition fails, 4 for file-system errors.

pub mod commands;
pub mod error;
pub mod report;
pub mod reproduce;
pub mod scenario;

pub use commands::{run, run_args, Cli};
pub use error::{CliError, CliResult};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "DEFERRAL_WORKERS";

/// Sizes the global thread pool from [`WORKERS_ENV`]; unset means one
/// worker per available core.
pub fn configure_workers() -> CliResult<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Validation(format!(
            "{WORKERS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(e.to_string()))
}
