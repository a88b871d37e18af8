//! Config-driven front end for `viscoctl-core`: TOML experiment files, the
//! `resolvent`/`simulate`/`control`/`diagnostics` runs, and their CSV output.

pub mod commands;
pub mod config;
pub mod output;

use viscoctl_core::Error;

pub use config::{ConfigError, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STABILITY: i32 = 3;
pub const EXIT_GRAM: i32 = 4;

/// Process exit code for a failed run.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidArgument(_)) => EXIT_CONFIG,
        Some(Error::Unresolved { .. }) => EXIT_STABILITY,
        Some(Error::GramDegenerate { .. }) => EXIT_GRAM,
        None => EXIT_OTHER,
    }
}
