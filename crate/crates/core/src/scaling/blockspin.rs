use num_complex::Complex64;

use super::ScalingError;
use crate::field::{field_char_exponents, FieldCfOptions, FieldKernel, SmoothedTest, DEFAULT_PADDING};
use crate::kernel::KernelParams;
use crate::noise::{ChargeLaw, Cuboid, TestFunction};

#[derive(Clone, Debug, PartialEq)]
pub struct BlockspinReport {
    pub alpha: f64,
    /// Exponents of ⟨φ^z, f⟩: mass m, activity z, charges/√z.
    pub rescaled: Vec<Complex64>,
    /// Exponents of ⟨φ, f̃⟩: mass m/α, activity 1, unit charges.
    pub blocked: Vec<Complex64>,
    pub max_discrepancy: f64,
}

/// Compares the two sides of the change of variables x → αx, m → m/α with
/// α = z^{1/d}: G_m(u) = α^{d−1} G_{m/α}(αu) turns z ∫ over Λ into ∫ over
/// αΛ and the rescaled pairing with f into the plain pairing with
/// f̃(y) = α^{(d−2)/2−d} f(y/α).
pub fn blockspin_identity_check(
    z: f64,
    params: &KernelParams,
    law: &ChargeLaw,
    f: &TestFunction,
    t_grid: &[f64],
    opts: &FieldCfOptions,
) -> Result<BlockspinReport, ScalingError> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(ScalingError::Domain(format!("activity z must be positive, got {z}")));
    }
    let d = params.dim() as f64;
    let alpha = z.powf(1.0 / d);
    let support = f
        .effective_support(1e-16)
        .ok_or_else(|| ScalingError::Domain("test function has no bounded support".into()))?;
    let region = support.padded(DEFAULT_PADDING / params.mass());
    let kernel = FieldKernel::green(params.clone())?;
    let smoothed = SmoothedTest::new(&kernel, f)?;
    let rescaled = field_char_exponents(&region, z, law, &smoothed, t_grid, true, opts)?;

    let blocked_params = params.with_mass(params.mass() / alpha)?;
    let blocked_kernel = FieldKernel::green(blocked_params)?;
    let f_tilde = f.dilated(alpha, alpha.powf((d - 2.0) / 2.0 - d))?;
    let blocked_region = Cuboid::new(
        region.lower().iter().map(|x| alpha * x).collect(),
        region.upper().iter().map(|x| alpha * x).collect(),
    )?;
    let blocked_smoothed = SmoothedTest::new(&blocked_kernel, &f_tilde)?;
    let blocked = field_char_exponents(&blocked_region, 1.0, law, &blocked_smoothed, t_grid, false, opts)?;
    let max_discrepancy = rescaled
        .iter()
        .zip(&blocked)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(BlockspinReport {
        alpha,
        rescaled,
        blocked,
        max_discrepancy,
    })
}
