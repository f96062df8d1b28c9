//! Energy densities v, the interaction energy U(η) = ∫ v(G * η) dx and the
//! cosine normalizer N(z).

mod energy;
mod indicator;
mod normalizer;
mod spec;

pub use energy::{
    apply_move, delta_energy, interaction_energy, interaction_energy_grid, InteractionDomain, Move,
};
pub use indicator::IndicatorKernel;
pub use normalizer::{
    log_renorm_normalizer, radial_phase_integral, renorm_normalizer, unit_sphere_area,
    RadialQuadrature,
};
pub use spec::PotentialSpec;
pub(crate) use spec::cos_minus_one;

use thiserror::Error;

use crate::noise::NoiseError;
use crate::quadrature::QuadError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("logic error: {0}")]
    Logic(String),
    #[error(transparent)]
    Numerical(#[from] QuadError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// v(φ)
pub fn potential_value(spec: &PotentialSpec, phi: f64) -> f64 {
    spec.value(phi)
}
