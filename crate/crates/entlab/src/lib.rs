//! Finite measures on dyadic grids, their discretized entropies, and
//! machine-checkable verifiers for entropy inequalities, Frostman
//! certificates, the entropy BSG coupling, distance measures and
//! covering-number experiments.
//!
//! Every measure is a [`Dist`]: a sparse mass map over cells of a dyadic
//! grid. A cell index `k` at level `n` stands for `[k 2^-n, (k+1) 2^-n)`,
//! and maps are evaluated at the left endpoint, so all derived laws are
//! exact laws of discretized variables.
#![forbid(unsafe_code)]

pub mod bsg_construct;
pub mod covering_experiments;
pub mod distance_energy;
pub mod dyadic_measure;
pub mod entropy_core;
mod error;
pub mod examples_gallery;
pub mod frostman_cert;
pub mod pushforward;
pub mod random;
pub mod rational;
pub mod report;

pub use dyadic_measure::{Cell, Dist, Event, GridSpec};
pub use error::{Error, Result};
pub use report::{KappaTerm, Report};

/// Version tag written into every serialized artifact.
pub const FORMAT_VERSION: u32 = 1;
