//! Scaling-limit experiments: CLT convergence of rescaled noise and fields,
//! the block-spin identity, low-order perturbative coefficients and the
//! triviality of unrenormalized cosine densities.

mod blockspin;
mod perturbative;
mod sweep;
mod triviality;

pub use blockspin::{blockspin_identity_check, BlockspinReport};
pub use perturbative::{
    first_order_mc, perturbative_coefficient, PerturbativeModel, PerturbativeOptions, PerturbativeSetup,
};
pub use sweep::{
    analytic_convergence_sweep, ecf_convergence_sweep, limit_cf, AnalyticPoint, ScalingSweepSpec,
    SweepPoint, SweepRow, SweepTarget,
};
pub use triviality::{triviality_curve, TrivialityMc, TrivialityOptions, TrivialityRecord};

use thiserror::Error;

use crate::field::FieldError;
use crate::kernel::KernelError;
use crate::noise::NoiseError;
use crate::potential::PotentialError;
use crate::quadrature::QuadError;
use crate::stats::StatsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Samples per parallel chunk; chunk c of sweep point k draws from stream
/// (k << 32) | c, so results do not depend on the worker count.
pub(crate) const CHUNK: usize = 1000;

pub(crate) fn chunk_stream(seed: u64, point: usize, chunk: usize) -> crate::stats::RngStream {
    crate::stats::RngStream::new(seed, ((point as u64) << 32) | chunk as u64)
}
