//! Driver for the layersolve pipeline: configuration, sweeps over `A`,
//! exponent fits and report output.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod fit;
pub mod report;
pub mod sweep;

pub use config::{Config, Pair};
pub use error::{CliError, CliResult};
pub use fit::{fit_exponent, Fit};
pub use sweep::{run_sweep, SweepReport};
