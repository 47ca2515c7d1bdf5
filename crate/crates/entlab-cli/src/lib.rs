//! Batch front end for `entlab`: subcommands, run manifests and the
//! seeded verification suites.

pub mod commands;
pub mod manifest;
pub mod suites;

pub use commands::{execute, Command, Outcome, UsageError};
pub use manifest::{run, RunManifest};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "ENTLAB_THREADS";

/// Exit status of a run that completed with a failing check.
pub const EXIT_CHECK_FAILED: i32 = 1;

/// Exit status of a usage, parse or validation error.
pub const EXIT_USAGE: i32 = 2;
