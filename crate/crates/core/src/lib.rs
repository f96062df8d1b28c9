pub mod stats;
pub mod quadrature;
pub mod kernel;
pub mod noise;
pub mod potential;
pub mod field;
pub mod gce;
pub mod scaling;
