//! Steady states, relative-phase distributions, perturbative and semiclassical
//! predictions, and correlation measures for two weakly coupled micromasers.

// `!(x <= tol)` is used on purpose so that NaN fails every numerical check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod correlations;
pub mod error;
pub mod generator;
pub mod linalg;
pub mod params;
pub mod perturbation;
pub mod phase;
pub mod semiclassical;
pub mod solver;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
