//! File formats, experiment scheduling and reporting around [`mlsbm_core`].
//!
//! * [`io`]: JSON manifests, 1-based edge lists and label files.
//! * [`harness`]: planted-partition sweeps and real-data runs, parallel over
//!   replicates with deterministic output order.
//! * [`report`]: CSV rows and a mean ± sd SVG line plot.
//!
//! The `mlsbm` binary wraps these as the `fit`, `real`, `simulate`, `eval`,
//! `theory` and `convert` subcommands.

pub mod error;
pub mod harness;
pub mod io;
pub mod report;

pub use error::{Error, Result};
pub use mlsbm_core as core;
