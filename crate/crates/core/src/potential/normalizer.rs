use std::f64::consts::PI;

use super::PotentialError;
use crate::kernel::KernelParams;
use crate::noise::ChargeLaw;
use crate::quadrature::{pairwise_sum, GaussLegendre};

/// Resolution of the radial quadrature behind [`renorm_normalizer`].
#[derive(Clone, Debug, PartialEq)]
pub struct RadialQuadrature {
    /// 1 is the default; 0.5 halves every panel and doubles the resolved core.
    pub resolution: f64,
}

impl Default for RadialQuadrature {
    fn default() -> Self {
        Self { resolution: 1.0 }
    }
}

const CORE_CYCLES: f64 = 200.0;
const PANEL_ORDER: usize = 10;
const MAX_PANELS: usize = 2_000_000;
/// Radii beyond this many decay lengths contribute below e^{-80}.
const OUTER_REACH: f64 = 40.0;

/// Surface area of the unit sphere in ℝᵈ.
pub fn unit_sphere_area(d: usize) -> f64 {
    let d = d as f64;
    2.0 * PI.powf(d / 2.0) / libm::tgamma(d / 2.0)
}

/// ∫_{ℝᵈ} h(G(|u|)) du where h oscillates with phase a·G.
///
/// Inside the core radius δ, where a·G(δ) = 2π·K, the integrand is replaced
/// by its mean `core_mean`; outside, panels in ln r are sized so the phase
/// moves by at most π/2 (times the resolution) across each.
pub fn radial_phase_integral(
    params: &KernelParams,
    a: f64,
    core_mean: f64,
    h: impl Fn(f64) -> f64,
    quad: &RadialQuadrature,
) -> Result<f64, PotentialError> {
    let d = params.dim();
    let res = quad.resolution;
    if !(res > 0.0 && res <= 4.0) {
        return Err(PotentialError::Domain(format!("resolution must lie in (0, 4], got {res}")));
    }
    let area = unit_sphere_area(d);
    let r_end = OUTER_REACH / params.mass();
    let target = 2.0 * PI * CORE_CYCLES / res;
    let delta = core_radius(params, a, target)
        .max(1e-150 / params.mass())
        .min(r_end);
    let core = core_mean * delta.powi(d as i32) / d as f64;
    let gl = GaussLegendre::new(PANEL_ORDER);
    let max_step = 0.5 * res;
    let max_phase = 0.5 * PI * res;
    let mut u = delta.ln();
    let u_end = r_end.ln();
    let mut panels = Vec::new();
    while u < u_end {
        let r = u.exp();
        let theta = a * params.green(r);
        let rate = (theta * params.log_slope(r)).abs();
        let mut step = max_step;
        if rate > 0.0 {
            step = step.min(max_phase / rate);
        }
        let next = (u + step).min(u_end);
        let value = gl.integrate(u, next, |v| {
            let r = v.exp();
            r.powi(d as i32) * h(params.green(r))
        });
        panels.push(value);
        if panels.len() > MAX_PANELS {
            return Err(PotentialError::Domain("radial quadrature exceeded its panel budget".into()));
        }
        u = next;
    }
    Ok(area * (core + pairwise_sum(&panels)))
}

/// Radius where a·G(r) equals `target` (0 when the phase never gets there).
fn core_radius(params: &KernelParams, a: f64, target: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let d = params.dim() as f64;
    // start from the origin asymptote, then Newton in ln r
    let mut u = ((params.near_origin_constant() * a / target).ln()) / (d - 1.0);
    for _ in 0..100 {
        let r = u.exp();
        let f = params.log_green(r) + a.ln() - target.ln();
        let step = f / params.log_slope(r);
        u -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    u.exp()
}

/// ln N(z), N(z) = exp(z ∫ Σ_s p_s (cos(α s G(|u|)/√z) − 1) du).
pub fn log_renorm_normalizer(
    z: f64,
    alpha: f64,
    law: &ChargeLaw,
    params: &KernelParams,
    quad: &RadialQuadrature,
) -> Result<f64, PotentialError> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(PotentialError::Domain(format!("activity z must be positive, got {z}")));
    }
    if !law.is_symmetric() {
        return Err(PotentialError::Domain(
            "the normalizer is only real for symmetric charge laws".into(),
        ));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &(s, p) in law.atoms() {
        if s == 0.0 || p == 0.0 {
            continue;
        }
        let a = (alpha * s).abs() / z.sqrt();
        let i = radial_phase_integral(params, a, -1.0, |g| super::spec::cos_minus_one(a * g), quad)?;
        total += p * i;
    }
    Ok(z * total)
}

/// N(z) = E[cos(α φ₀^z(0))].
pub fn renorm_normalizer(
    z: f64,
    alpha: f64,
    law: &ChargeLaw,
    params: &KernelParams,
    quad: &RadialQuadrature,
) -> Result<f64, PotentialError> {
    Ok(log_renorm_normalizer(z, alpha, law, params, quad)?.exp())
}
