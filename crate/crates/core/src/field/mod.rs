//! Convoluted Poisson noise φ = G * η: point evaluation, pairings with test
//! functions and the exact characteristic functional.

mod kernel;
mod smoothed;

pub use kernel::FieldKernel;
pub use smoothed::SmoothedTest;

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::kernel::{smoothed_resolvent, KernelError, TableError};
use crate::noise::{
    cf_from_exponent, levy_khinchine_exponents, CfQuadrature, ChargeConfiguration, ChargeLaw,
    Cuboid, NoiseError, TestFunction,
};
use crate::quadrature::{integrate_box_converged, integrate_cells_adaptive, CubatureOptions, QuadError};

/// Minimum distance between an evaluation point and a particle.
pub const DELTA_POS: f64 = 1e-12;

/// Default padding of the particle box, in decay lengths 1/m.
pub const DEFAULT_PADDING: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("point lies within {DELTA_POS:e} of particle {index}")]
    Singular { index: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// A configuration seen through a kernel, optionally with charges × 1/√z.
#[derive(Clone, Copy, Debug)]
pub struct FieldContext<'a> {
    kernel: &'a FieldKernel,
    config: &'a ChargeConfiguration,
    charge_scale: f64,
}

impl<'a> FieldContext<'a> {
    pub fn new(kernel: &'a FieldKernel, config: &'a ChargeConfiguration) -> Self {
        Self {
            kernel,
            config,
            charge_scale: 1.0,
        }
    }

    /// Field φ^z: every charge divided by √z.
    pub fn rescaled(
        kernel: &'a FieldKernel,
        config: &'a ChargeConfiguration,
        z: f64,
    ) -> Result<Self, FieldError> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(FieldError::Domain(format!("rescale activity must be positive, got {z}")));
        }
        Ok(Self {
            kernel,
            config,
            charge_scale: 1.0 / z.sqrt(),
        })
    }

    pub fn kernel(&self) -> &FieldKernel {
        self.kernel
    }

    pub fn config(&self) -> &ChargeConfiguration {
        self.config
    }

    pub fn charge_scale(&self) -> f64 {
        self.charge_scale
    }

    /// Σ_j s′_j K(|x − y_j|) without the proximity guard.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self
            .config
            .iter()
            .map(|(y, s)| {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                s * self.kernel.radial(r2.sqrt())
            })
            .sum();
        sum * self.charge_scale
    }
}

/// φ(x) = Σ_j s′_j G(|x − y_j|).
pub fn field_at(ctx: &FieldContext<'_>, x: &[f64]) -> Result<f64, FieldError> {
    if ctx.kernel.is_singular() {
        for (i, (y, _)) in ctx.config.iter().enumerate() {
            let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            if r2.sqrt() <= DELTA_POS {
                return Err(FieldError::Singular { index: i });
            }
        }
    }
    Ok(ctx.eval_unchecked(x))
}

/// ⟨φ, f⟩ = Σ_j s′_j (G * f)(y_j).
pub fn pair_field(ctx: &FieldContext<'_>, smoothed: &SmoothedTest) -> f64 {
    ctx.config
        .iter()
        .map(|(y, s)| s * smoothed.eval(y))
        .sum::<f64>()
        * ctx.charge_scale
}

/// ⟨φ, f⟩ = ∫ φ(x) f(x) dx by adaptive cubature over f's support; the
/// integrable singularities are resolved by cell refinement.
pub fn pair_field_direct(
    ctx: &FieldContext<'_>,
    f: &TestFunction,
    abs_tol: f64,
) -> Result<f64, FieldError> {
    let support = f
        .effective_support(1e-16)
        .ok_or_else(|| FieldError::Domain("test function has no support".into()))?;
    let opts = CubatureOptions {
        initial_cell: f.min_scale() / 2.0,
        abs_tol,
        max_evaluations: 200_000_000,
        integrand_bound: None,
    };
    let est = integrate_cells_adaptive(
        support.lower(),
        support.upper(),
        |x: &[f64]| ctx.eval_unchecked(x) * f.eval(x),
        &opts,
    )?;
    Ok(est.value)
}

/// Options for the analytic characteristic functional.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldCfOptions {
    pub quad: CfQuadrature,
}

impl Default for FieldCfOptions {
    fn default() -> Self {
        Self {
            quad: CfQuadrature {
                abs_tol: 1e-8,
                start_panels: 8,
                max_panels: 1024,
            },
        }
    }
}

/// Lévy–Khinchine exponents of ⟨φ, f⟩ for Poisson particles of activity z
/// in `region` (typically the observation box padded by the kernel reach).
pub fn field_char_exponents(
    region: &Cuboid,
    z: f64,
    law: &ChargeLaw,
    smoothed: &SmoothedTest,
    t_grid: &[f64],
    rescaled: bool,
    opts: &FieldCfOptions,
) -> Result<Vec<Complex64>, FieldError> {
    if !(z > 0.0) {
        return Err(FieldError::Domain(format!("activity z must be positive, got {z}")));
    }
    let scale = if rescaled { 1.0 / z.sqrt() } else { 1.0 };
    let f = smoothed.test_function();
    let mut splits = f.axis_breaks();
    splits.resize(region.dim(), Vec::new());
    let side = (0..region.dim()).map(|k| region.side(k)).fold(0.0, f64::max);
    let natural = (side / f.min_scale()).ceil() as usize;
    let quad = CfQuadrature {
        start_panels: opts.quad.start_panels.max(natural.min(64)),
        ..opts.quad.clone()
    };
    Ok(levy_khinchine_exponents(
        region,
        z,
        law,
        scale,
        t_grid,
        |x| smoothed.eval(x),
        &splits,
        &quad,
    )?)
}

/// E[e^{i t ⟨φ, f⟩}] at each t.
pub fn field_char_analytic(
    region: &Cuboid,
    z: f64,
    law: &ChargeLaw,
    smoothed: &SmoothedTest,
    t_grid: &[f64],
    rescaled: bool,
    opts: &FieldCfOptions,
) -> Result<Vec<Complex64>, FieldError> {
    Ok(field_char_exponents(region, z, law, smoothed, t_grid, rescaled, opts)?
        .into_iter()
        .map(cf_from_exponent)
        .collect())
}

/// Q(f, h) = ∫_{ℝᵈ} (K * f)(x) (K * h)(x) dx.
pub fn green_inner(kernel: &FieldKernel, f: &TestFunction, h: &TestFunction) -> Result<f64, FieldError> {
    let mut total = 0.0;
    let mut fallback: Vec<(TestFunction, TestFunction)> = Vec::new();
    for a in f.terms() {
        for b in h.terms() {
            match (a, b, kernel.params()) {
                (
                    TestFunction::GaussianBump { center: c1, width: w1, amplitude: a1 },
                    TestFunction::GaussianBump { center: c2, width: w2, amplitude: a2 },
                    Some(params),
                ) => {
                    let d = c1.len() as f64;
                    let eps = kernel.smoothing();
                    let b = 0.5 * (w1 * w1 + w2 * w2) + eps * eps;
                    let dist = c1.iter().zip(c2).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                    let norm = a1 * a2 * (4.0 * PI * PI * w1 * w1 * w2 * w2).powf(d / 2.0);
                    total += norm * smoothed_resolvent(&params, b, dist)?;
                }
                _ => fallback.push(((*a).clone(), (*b).clone())),
            }
        }
    }
    for (a, b) in fallback {
        total += green_inner_by_quadrature(kernel, &a, &b)?;
    }
    Ok(total)
}

fn green_inner_by_quadrature(kernel: &FieldKernel, a: &TestFunction, b: &TestFunction) -> Result<f64, FieldError> {
    let sa = SmoothedTest::new(kernel, a)?;
    let sb = SmoothedTest::new(kernel, b)?;
    let reach = kernel.reach(30.0);
    let hull = TestFunction::sum(vec![a.clone(), b.clone()])?
        .effective_support(1e-16)
        .ok_or_else(|| FieldError::Domain("empty test function".into()))?
        .padded(reach);
    let mut splits = TestFunction::sum(vec![a.clone(), b.clone()])?.axis_breaks();
    splits.resize(hull.dim(), Vec::new());
    let est = integrate_box_converged(
        hull.lower(),
        hull.upper(),
        &splits,
        |x| sa.eval(x) * sb.eval(x),
        1e-9,
        16,
        1024,
    )?;
    Ok(est.value)
}

/// Cov(⟨φ, f⟩, ⟨φ, h⟩) = z E[S²] Q(f, h) for full-space noise.
pub fn free_covariance(
    kernel: &FieldKernel,
    f: &TestFunction,
    h: &TestFunction,
    z: f64,
    law: &ChargeLaw,
) -> Result<f64, FieldError> {
    Ok(z * law.second_moment() * green_inner(kernel, f, h)?)
}

/// Cell-centred evaluation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.counts.len())
            .map(|k| (self.upper[k] - self.lower[k]) / self.counts[k] as f64)
            .product()
    }

    /// Row-major point list (last axis fastest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let d = self.counts.len();
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; d];
        for _ in 0..self.len() {
            out.push(
                (0..d)
                    .map(|k| {
                        let h = (self.upper[k] - self.lower[k]) / self.counts[k] as f64;
                        self.lower[k] + h * (idx[k] as f64 + 0.5)
                    })
                    .collect(),
            );
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < self.counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }
}

/// Field values on the grid, row-major.
pub fn field_on_grid(ctx: &FieldContext<'_>, grid: &GridSpec) -> Result<Vec<f64>, FieldError> {
    grid.points().iter().map(|x| field_at(ctx, x)).collect()
}

/// Header line and one value per line.
pub fn dump_field_grid(grid: &GridSpec, values: &[f64]) -> String {
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",");
    let mut out = String::new();
    writeln!(
        out,
        "# cpnlab-field-grid d={} lower={} upper={} counts={}",
        grid.counts.len(),
        join(&grid.lower),
        join(&grid.upper),
        grid.counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    )
    .unwrap();
    for v in values {
        writeln!(out, "{v:.16e}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{KernelParams, MollifierParams};
    use crate::noise::sample_configuration;
    use crate::stats::RngStream;

    fn green2() -> (KernelParams, FieldKernel) {
        let p = KernelParams::new(2, 1.0).unwrap();
        (p, FieldKernel::green(p).unwrap())
    }

    #[test]
    fn point_evaluation() {
        let (p, k) = green2();
        let b = Cuboid::cube(2, 0.0, 4.0).unwrap();
        let empty = ChargeConfiguration::empty(b.clone());
        assert_eq!(field_at(&FieldContext::new(&k, &empty), &[1.0, 1.0]).unwrap(), 0.0);
        let one = ChargeConfiguration::from_parts(b.clone(), &[vec![1.0, 1.0]], &[1.0]).unwrap();
        let ctx = FieldContext::new(&k, &one);
        let v = field_at(&ctx, &[1.0, 1.7]).unwrap();
        assert!((v - p.green(0.7)).abs() < 1e-10 * v);
        assert!(matches!(field_at(&ctx, &[1.0, 1.0]), Err(FieldError::Singular { index: 0 })));
        let two = ChargeConfiguration::from_parts(b, &[vec![1.0, 1.0], vec![3.0, 1.0]], &[1.0, -2.0]).unwrap();
        let v2 = field_at(&FieldContext::new(&k, &two), &[2.0, 1.0]).unwrap();
        assert!((v2 - (p.green(1.0) - 2.0 * p.green(1.0))).abs() < 1e-12);
    }

    #[test]
    fn pairing_linearity_and_two_routes() {
        let (_, k) = green2();
        let b = Cuboid::cube(2, 0.0, 4.0).unwrap();
        let law = ChargeLaw::two_point_symmetric(1.0).unwrap();
        let f = TestFunction::bump(vec![2.0, 2.0], 0.5, 1.0).unwrap();
        let s = SmoothedTest::new(&k, &f).unwrap();
        let mut rng = RngStream::new(11, 0);
        for _ in 0..3 {
            let c = sample_configuration(&b, 0.5, &law, &mut rng).unwrap();
            let ctx = FieldContext::new(&k, &c);
            let a = pair_field(&ctx, &s);
            let scaled = c.scaled(-2.5);
            assert!((pair_field(&FieldContext::new(&k, &scaled), &s) + 2.5 * a).abs() < 1e-12);
            let direct = pair_field_direct(&ctx, &f, 1e-6).unwrap();
            assert!((a - direct).abs() < 1e-5, "{a} vs {direct}");
        }
    }

    #[test]
    fn covariance_closed_form_matches_quadrature() {
        let (_, k) = green2();
        let f = TestFunction::bump(vec![0.0, 0.0], 0.5, 1.0).unwrap();
        let h = TestFunction::bump(vec![0.8, -0.3], 0.7, -0.6).unwrap();
        let closed = green_inner(&k, &f, &h).unwrap();
        let quad = green_inner_by_quadrature(&k, &f, &h).unwrap();
        assert!(((closed - quad) / closed).abs() < 1e-7, "{closed} vs {quad}");
        let m = MollifierParams::new(0.3).unwrap();
        let km = FieldKernel::mollified(KernelParams::new(2, 1.0).unwrap(), m).unwrap();
        let closed = green_inner(&km, &f, &h).unwrap();
        let quad = green_inner_by_quadrature(&km, &f, &h).unwrap();
        assert!(((closed - quad) / closed).abs() < 1e-7, "{closed} vs {quad}");
    }

    #[test]
    fn cf_trivial_and_bounded() {
        let (_, k) = green2();
        let b = Cuboid::cube(2, 0.0, 4.0).unwrap().padded(3.0);
        let law = ChargeLaw::two_point_symmetric(1.0).unwrap();
        let f = TestFunction::bump(vec![2.0, 2.0], 0.5, 1.0).unwrap();
        let s = SmoothedTest::new(&k, &f).unwrap();
        let ts = [0.0, 1.0, 5.0, 20.0];
        let cf = field_char_analytic(&b, 2.0, &law, &s, &ts, false, &FieldCfOptions::default()).unwrap();
        assert_eq!(cf[0], Complex64::new(1.0, 0.0));
        assert!(cf.iter().all(|c| c.norm() <= 1.0));
    }

    #[test]
    fn grid_dump_shape() {
        let g = GridSpec {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 2.0],
            counts: vec![2, 3],
        };
        let pts = g.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec![0.25, 1.0]);
        let text = dump_field_grid(&g, &vec![0.5; 6]);
        assert_eq!(text.lines().count(), 7);
    }
}
