//! Green's function of the pseudo-differential operator (−Δ + m²)^{1/2}.
//!
//! In d dimensions
//!
//! ```text
//! G(r) = 2^{(1−d)/2} π^{−(d+1)/2} (m/r)^{(d−1)/2} K_{(d−1)/2}(m r)
//! ```
//!
//! which behaves like `C_d r^{−(d−1)}` at the origin and like `e^{−m r}` at
//! infinity. The Gaussian-mollified kernel `G_ε` (Fourier multiplier
//! `(k² + m²)^{−1/2} e^{−ε² k²/2}`) is evaluated through its heat-kernel
//! representation, a one-dimensional integral over Gaussian widths.

mod bessel;
mod table;

pub use bessel::{bessel_k, bessel_k_scaled, bessel_k_scaled_pair};
pub use table::{build_mollified_table, build_table, KernelTable, TableError};

use std::f64::consts::PI;

use thiserror::Error;

use crate::quadrature::{integrate_semi_infinite, QuadError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid kernel parameters: {0}")]
    Construction(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Dimension and mass of the kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    dim: usize,
    mass: f64,
}

impl KernelParams {
    pub fn new(dim: usize, mass: f64) -> Result<Self, KernelError> {
        if dim < 2 {
            return Err(KernelError::Construction(format!(
                "dimension must be at least 2, got {dim}"
            )));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(KernelError::Construction(format!(
                "mass must be positive and finite, got {mass}"
            )));
        }
        Ok(Self { dim, mass })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Bessel order (d − 1)/2.
    pub fn order(&self) -> f64 {
        (self.dim as f64 - 1.0) / 2.0
    }

    /// Same dimension, different mass.
    pub fn with_mass(&self, mass: f64) -> Result<Self, KernelError> {
        Self::new(self.dim, mass)
    }

    fn prefactor(&self) -> f64 {
        let d = self.dim as f64;
        2f64.powf((1.0 - d) / 2.0) * PI.powf(-(d + 1.0) / 2.0)
    }

    /// C_d in G(r) ≈ C_d r^{−(d−1)} as r → 0.
    pub fn near_origin_constant(&self) -> f64 {
        let d = self.dim as f64;
        libm::tgamma((d - 1.0) / 2.0) / (2.0 * PI.powf((d + 1.0) / 2.0))
    }

    /// G(r) for r > 0 (no argument check).
    #[inline]
    pub fn green(&self, r: f64) -> f64 {
        let nu = self.order();
        let x = self.mass * r;
        self.prefactor() * (self.mass / r).powf(nu) * bessel_k_scaled(nu, x) * (-x).exp()
    }

    /// ln G(r), usable far into the tail where G underflows.
    pub fn log_green(&self, r: f64) -> f64 {
        let nu = self.order();
        let x = self.mass * r;
        self.prefactor().ln() + nu * (self.mass / r).ln() + bessel_k_scaled(nu, x).ln() - x
    }

    /// d ln G / d ln r = −m r K_{ν+1}(m r) / K_ν(m r).
    pub fn log_slope(&self, r: f64) -> f64 {
        let x = self.mass * r;
        let (k0, k1) = bessel_k_scaled_pair(self.order(), x);
        -x * k1 / k0
    }
}

/// Width of the Gaussian mollifier in position space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierParams {
    epsilon: f64,
}

impl MollifierParams {
    pub fn new(epsilon: f64) -> Result<Self, KernelError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(KernelError::Domain(format!(
                "mollifier width must be positive, got {epsilon}"
            )));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// G(r) with argument checking.
pub fn green_evaluate(params: &KernelParams, r: f64) -> Result<f64, KernelError> {
    if !(r > 0.0) {
        return Err(KernelError::Domain(format!("radius must be positive, got {r}")));
    }
    Ok(params.green(r))
}

/// G_ε(r) = (G * N(0, ε² I))(r), finite at r = 0.
pub fn green_mollified(
    params: &KernelParams,
    moll: &MollifierParams,
    r: f64,
) -> Result<f64, KernelError> {
    if !(r >= 0.0) {
        return Err(KernelError::Domain(format!("radius must be non-negative, got {r}")));
    }
    Ok(gaussian_smoothed_green(params, moll.epsilon, r)?)
}

/// Green's function convolved with an isotropic Gaussian of standard
/// deviation `width` (width = 0 gives G itself for r > 0).
///
/// Uses (k² + m²)^{−1/2} = π^{−1/2} ∫_0^∞ s^{−1/2} e^{−s(k²+m²)} ds with s = u²:
///
/// ```text
/// G_w(r) = 2/√π ∫_0^∞ (4π a)^{−d/2} exp(−m² u² − r²/(4a)) du,   a = u² + w²/2
/// ```
pub fn gaussian_smoothed_green(
    params: &KernelParams,
    width: f64,
    r: f64,
) -> Result<f64, QuadError> {
    let d = params.dim as f64;
    let m2 = params.mass * params.mass;
    let b = 0.5 * width * width;
    let r2 = r * r;
    let integrand = |u: f64| {
        let a = u * u + b;
        if a <= 0.0 {
            return 0.0;
        }
        (4.0 * PI * a).powf(-d / 2.0) * (-m2 * u * u - r2 / (4.0 * a)).exp()
    };
    // substitute u = L·v so the mapped integrand is O(1) wide
    let scale = (0.5 * r).max(width).min(1.0 / params.mass).max(1e-300);
    let est = integrate_semi_infinite(|v| integrand(scale * v), 0.0, 0.0, 1e-13, 4000)?;
    Ok(2.0 / PI.sqrt() * scale * est.value)
}

/// Kernel of (−Δ + m²)^{−1} = G * G, smoothed by a Gaussian of variance 2b
/// per axis, at distance `dist`:
///
/// ```text
/// ∫_0^∞ e^{−s m²} (4π(s + b))^{−d/2} exp(−dist²/(4(s + b))) ds
/// ```
pub fn smoothed_resolvent(params: &KernelParams, b: f64, dist: f64) -> Result<f64, QuadError> {
    let d = params.dim as f64;
    let m2 = params.mass * params.mass;
    let x2 = dist * dist;
    let integrand = |s: f64| {
        let a = s + b;
        if a <= 0.0 {
            return 0.0;
        }
        (-s * m2).exp() * (4.0 * PI * a).powf(-d / 2.0) * (-x2 / (4.0 * a)).exp()
    };
    let scale = (x2 / 4.0).max(b).min(1.0 / m2).max(1e-300);
    let est = integrate_semi_infinite(|v| integrand(scale * v), 0.0, 0.0, 1e-12, 4000)?;
    Ok(scale * est.value)
}
