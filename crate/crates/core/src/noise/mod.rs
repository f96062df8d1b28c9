//! Marked Poisson noise in a box: sampling, pairings with test functions and
//! the exact Lévy–Khinchine characteristic function.

mod configuration;
mod law;
mod region;
mod sample;
mod testfn;

pub use configuration::{dump_configuration, load_configuration, ChargeConfiguration, DumpHeader};
pub use law::ChargeLaw;
pub use region::{Cuboid, Isometry};
pub use sample::{sample_configuration, sample_poisson};
pub use testfn::TestFunction;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::quadrature::{pairwise_sum, QuadError, TensorGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("numerical error: {0}")]
    Numerical(#[from] QuadError),
}

/// ⟨η, f⟩
pub fn pair_noise(config: &ChargeConfiguration, f: &TestFunction) -> f64 {
    config.pair(f)
}

/// Resolution control for characteristic-function quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct CfQuadrature {
    /// Target absolute accuracy of the exponent.
    pub abs_tol: f64,
    /// Initial panels per axis (order-8 Gauss–Legendre each).
    pub start_panels: usize,
    pub max_panels: usize,
}

impl Default for CfQuadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            start_panels: 8,
            max_panels: 512,
        }
    }
}

/// e^{iθ} − 1 without cancellation for small θ.
#[inline]
pub fn expm1_i(theta: f64) -> Complex64 {
    let h = (0.5 * theta).sin();
    Complex64::new(-2.0 * h * h, theta.sin())
}

/// Exponents  z ∫_region Σ_s p_s (e^{i t s·scale·g(x)} − 1) dx  for every t,
/// refining the tensor grid until all of them move by less than `abs_tol`.
pub fn levy_khinchine_exponents(
    region: &Cuboid,
    z: f64,
    law: &ChargeLaw,
    charge_scale: f64,
    t_grid: &[f64],
    g: impl Fn(&[f64]) -> f64 + Sync,
    splits: &[Vec<f64>],
    quad: &CfQuadrature,
) -> Result<Vec<Complex64>, NoiseError> {
    const ORDER: usize = 8;
    let d = region.dim();
    let atoms: Vec<(f64, f64)> = law
        .atoms()
        .iter()
        .map(|&(s, p)| (s * charge_scale, p))
        .collect();
    let evaluate = |panels: usize| -> Vec<Complex64> {
        let grid = TensorGrid::uniform(region.lower(), region.upper(), panels, ORDER, splits);
        let mut nodes = Vec::with_capacity(grid.len() * d);
        let mut weights = Vec::with_capacity(grid.len());
        grid.for_each_node(|x, w| {
            nodes.extend_from_slice(x);
            weights.push(w);
        });
        let values: Vec<f64> = nodes.par_chunks(d).map(|x| g(x)).collect();
        t_grid
            .par_iter()
            .map(|&t| {
                if t == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let terms: Vec<Complex64> = values
                    .iter()
                    .zip(&weights)
                    .map(|(&v, &w)| {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for &(s, p) in &atoms {
                            acc += expm1_i(t * s * v) * p;
                        }
                        acc * w
                    })
                    .collect();
                pairwise_sum(&terms) * z
            })
            .collect()
    };
    let mut panels = quad.start_panels.max(1);
    let mut prev = evaluate(panels);
    loop {
        panels *= 2;
        let cur = evaluate(panels);
        let err = cur
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if err <= quad.abs_tol {
            return Ok(cur);
        }
        if panels >= quad.max_panels {
            return Err(NoiseError::Numerical(QuadError::NoConvergence {
                estimate: cur.iter().map(|c| c.norm()).fold(0.0, f64::max),
                error: err,
                requested: quad.abs_tol,
                evaluations: panels,
            }));
        }
        prev = cur;
    }
}

/// exp of an exponent with Re ≤ 0 enforced (quadrature noise can push a
/// vanishing real part slightly positive).
pub fn cf_from_exponent(e: Complex64) -> Complex64 {
    Complex64::new(e.re.min(0.0), e.im).exp()
}

fn box_splits(region: &Cuboid, f: &TestFunction) -> Vec<Vec<f64>> {
    let mut splits = f.axis_breaks();
    splits.resize(region.dim(), Vec::new());
    splits
}

fn start_panels(region: &Cuboid, f: &TestFunction, quad: &CfQuadrature) -> CfQuadrature {
    let side = (0..region.dim()).map(|k| region.side(k)).fold(0.0, f64::max);
    let natural = (side / f.min_scale()).ceil() as usize;
    CfQuadrature {
        start_panels: quad.start_panels.max(natural.min(64)),
        ..quad.clone()
    }
}

/// E[e^{i t ⟨η, f⟩}] for the marked Poisson process on `region`.
pub fn noise_char_analytic(
    region: &Cuboid,
    z: f64,
    law: &ChargeLaw,
    f: &TestFunction,
    t: f64,
) -> Result<Complex64, NoiseError> {
    Ok(noise_char_analytic_grid(region, z, law, f, 1.0, &[t], &CfQuadrature::default())?[0])
}

/// As [`noise_char_analytic`] on a t grid, charges multiplied by `charge_scale`.
pub fn noise_char_analytic_grid(
    region: &Cuboid,
    z: f64,
    law: &ChargeLaw,
    f: &TestFunction,
    charge_scale: f64,
    t_grid: &[f64],
    quad: &CfQuadrature,
) -> Result<Vec<Complex64>, NoiseError> {
    if !(z > 0.0) {
        return Err(NoiseError::Domain(format!("activity z must be positive, got {z}")));
    }
    if f.is_zero() {
        return Ok(vec![Complex64::new(1.0, 0.0); t_grid.len()]);
    }
    let exps = levy_khinchine_exponents(
        region,
        z,
        law,
        charge_scale,
        t_grid,
        |x| f.eval(x),
        &box_splits(region, f),
        &start_panels(region, f, quad),
    )?;
    Ok(exps.into_iter().map(cf_from_exponent).collect())
}

/// Campbell mean z E[S] ∫_Λ f and variance z E[S²] ∫_Λ f².
pub fn campbell_moments(region: &Cuboid, z: f64, law: &ChargeLaw, f: &TestFunction) -> (f64, f64) {
    let mean = z * law.mean() * f.integral(Some(region));
    let var = z * law.second_moment() * f.norm_sq(Some(region));
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Cuboid, ChargeLaw, TestFunction) {
        (
            Cuboid::cube(2, 0.0, 4.0).unwrap(),
            ChargeLaw::two_point_symmetric(1.0).unwrap(),
            TestFunction::bump(vec![2.0, 2.0], 0.5, 1.0).unwrap(),
        )
    }

    #[test]
    fn trivial_cf_values() {
        let (b, law, f) = setup();
        assert_eq!(noise_char_analytic(&b, 2.0, &law, &f, 0.0).unwrap(), Complex64::new(1.0, 0.0));
        let zero = TestFunction::bump(vec![2.0, 2.0], 0.5, 0.0).unwrap();
        assert_eq!(noise_char_analytic(&b, 2.0, &law, &zero, 3.0).unwrap(), Complex64::new(1.0, 0.0));
        for t in [-4.0, 0.3, 7.0] {
            assert!(noise_char_analytic(&b, 2.0, &law, &f, t).unwrap().norm() <= 1.0);
        }
    }

    #[test]
    fn point_mass_indicator_moments() {
        let b = Cuboid::cube(2, 0.0, 4.0).unwrap();
        let law = ChargeLaw::point_mass(1.0).unwrap();
        let f = TestFunction::BoxIndicator(b.clone());
        assert_eq!(campbell_moments(&b, 2.0, &law, &f), (32.0, 32.0));
    }

    #[test]
    fn variance_is_second_cumulant() {
        let (b, _, f) = setup();
        let law = ChargeLaw::discrete(vec![(-1.0, 0.3), (0.5, 0.5), (2.0, 0.2)]).unwrap();
        let (mean, var) = campbell_moments(&b, 2.0, &law, &f);
        let h = 1e-4;
        let quad = CfQuadrature {
            abs_tol: 1e-13,
            ..Default::default()
        };
        let e = levy_khinchine_exponents(&b, 2.0, &law, 1.0, &[-h, h], |x| f.eval(x), &f.axis_breaks(), &quad)
            .unwrap();
        // log φ(t) = iμt − σ²t²/2 + …; the second difference isolates σ²
        let second = -(e[0] + e[1]).re / (h * h);
        assert!(((second - var) / var).abs() < 1e-5, "{second} vs {var}");
        let first = (e[1] - e[0]).im / (2.0 * h);
        assert!(((first - mean) / mean).abs() < 1e-6);
    }

    #[test]
    fn euclidean_invariance() {
        let (b, law, f) = setup();
        let iso = Isometry::new(vec![1, 0], vec![-1.0, 1.0], vec![3.0, -1.5]).unwrap();
        let b2 = b.transformed(&iso);
        let f2 = f.transformed(&iso);
        for t in [0.5, 2.0, 5.0] {
            let a = noise_char_analytic(&b, 2.0, &law, &f, t).unwrap();
            let c = noise_char_analytic(&b2, 2.0, &law, &f2, t).unwrap();
            assert!((a - c).norm() < 1e-8);
        }
    }

    #[test]
    fn partition_independence_analytic() {
        let (b, law, f) = setup();
        let (l, r) = b.halves(0);
        let q = CfQuadrature::default();
        let ts = [0.7, 2.5];
        let whole = noise_char_analytic_grid(&b, 2.0, &law, &f, 1.0, &ts, &q).unwrap();
        let left = noise_char_analytic_grid(&l, 2.0, &law, &f, 1.0, &ts, &q).unwrap();
        let right = noise_char_analytic_grid(&r, 2.0, &law, &f, 1.0, &ts, &q).unwrap();
        for i in 0..2 {
            assert!((whole[i] - left[i] * right[i]).norm() < 1e-8);
        }
    }
}
