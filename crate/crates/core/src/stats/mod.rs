//! Mergeable streaming estimators, empirical characteristic functions and
//! deterministic random streams.

mod accumulator;
mod ecf;
pub mod gof;
mod rng;

pub use accumulator::{summarize, EstimatorAccumulator, Summary};
pub use ecf::{ecf_estimate, symmetric_grid, EcfPoint, Z99};
pub use rng::RngStream;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("logic error: {0}")]
    Logic(String),
}
