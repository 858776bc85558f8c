//! Sweep driver and reports for the `masersync` command-line tool.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

pub use config::{Axis, GridPoint, Measures, SweepConfig};
pub use error::{CliError, CliResult};
pub use sweep::{evaluate_point, run_sweep, SweepRow};
