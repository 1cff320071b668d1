//! Configuration, orchestration and persistence for the pflow laboratory.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod run;
pub mod snapshot;

pub use config::{parse_config, InitialSpec, ModelKind, SimConfig, KEYS_HELP};
pub use error::{CliError, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};
pub use run::{run, RunSummary};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotError};

/// Environment variable capping the data-parallel width.
pub const THREADS_ENV: &str = "PFLOW_THREADS";

/// Size the global rayon pool from `PFLOW_THREADS` when set.
pub fn init_thread_pool() -> Result<Option<usize>, CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize =
        raw.trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| CliError::Validation {
                key: THREADS_ENV.into(),
                constraint: format!("must be a positive integer, got `{raw}`"),
            })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation {
            key: THREADS_ENV.into(),
            constraint: e.to_string(),
        })?;
    Ok(Some(n))
}
