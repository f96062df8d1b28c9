use std::f64::consts::PI;
use std::sync::Arc;

use super::kernel::smoothed_table;
use super::{FieldError, FieldKernel};
use crate::kernel::KernelTable;
use crate::noise::TestFunction;
use crate::quadrature::{integrate_cells_adaptive, CubatureOptions};

/// Precomputed y ↦ (K * f)(y) for a field kernel K and test function f.
///
/// Gaussian bumps convolved with G or G_ε are again smoothed Green's
/// functions, so each bump becomes one table lookup; other pieces fall back
/// to adaptive cubature.
#[derive(Clone, Debug)]
pub struct SmoothedTest {
    parts: Vec<Part>,
    f: TestFunction,
}

#[derive(Clone, Debug)]
enum Part {
    Bump {
        center: Vec<f64>,
        factor: f64,
        table: Arc<KernelTable>,
    },
    Cubature {
        leaf: TestFunction,
        kernel: FieldKernel,
    },
}

const CUBATURE_TOL: f64 = 1e-9;

impl SmoothedTest {
    pub fn new(kernel: &FieldKernel, f: &TestFunction) -> Result<Self, FieldError> {
        let mut parts = Vec::new();
        let mut tables: Vec<(f64, Arc<KernelTable>)> = Vec::new();
        for leaf in f.terms() {
            match (leaf, kernel.params()) {
                (
                    TestFunction::GaussianBump {
                        center,
                        width,
                        amplitude,
                    },
                    Some(params),
                ) => {
                    let eps = kernel.smoothing();
                    let total = (width * width + eps * eps).sqrt();
                    let table = match tables.iter().find(|(w, _)| *w == total) {
                        Some((_, t)) => t.clone(),
                        None => {
                            let t = Arc::new(smoothed_table(&params, total)?);
                            tables.push((total, t.clone()));
                            t
                        }
                    };
                    let d = center.len() as f64;
                    parts.push(Part::Bump {
                        center: center.clone(),
                        factor: amplitude * (2.0 * PI * width * width).powf(d / 2.0),
                        table,
                    });
                }
                _ => parts.push(Part::Cubature {
                    leaf: leaf.clone(),
                    kernel: kernel.clone(),
                }),
            }
        }
        Ok(Self {
            parts,
            f: f.clone(),
        })
    }

    pub fn test_function(&self) -> &TestFunction {
        &self.f
    }

    /// True when every piece has a closed form (no cubature per call).
    pub fn is_closed_form(&self) -> bool {
        self.parts.iter().all(|p| matches!(p, Part::Bump { .. }))
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.parts
            .iter()
            .map(|p| match p {
                Part::Bump {
                    center,
                    factor,
                    table,
                } => {
                    let r2: f64 = y.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                    factor * table.eval(r2.sqrt())
                }
                Part::Cubature { leaf, kernel } => convolve_by_cubature(kernel, leaf, y),
            })
            .sum()
    }
}

/// ∫ K(|y − x|) leaf(x) dx over the leaf's effective support.
fn convolve_by_cubature(kernel: &FieldKernel, leaf: &TestFunction, y: &[f64]) -> f64 {
    let support = leaf
        .effective_support(1e-14)
        .expect("leaf has a support box");
    let scale = support.side(0).min(1.0);
    let opts = CubatureOptions {
        initial_cell: scale / 4.0,
        abs_tol: CUBATURE_TOL,
        max_evaluations: 50_000_000,
        integrand_bound: None,
    };
    let integrand = |x: &[f64]| {
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        kernel.radial(r2.sqrt()) * leaf.eval(x)
    };
    match integrate_cells_adaptive(support.lower(), support.upper(), integrand, &opts) {
        Ok(e) => e.value,
        Err(crate::quadrature::QuadError::NoConvergence { estimate, .. }) => estimate,
        Err(_) => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelParams;
    use crate::noise::Cuboid;

    #[test]
    fn bump_closed_form_matches_cubature() {
        let p = KernelParams::new(2, 1.0).unwrap();
        let k = FieldKernel::exact(p);
        let f = TestFunction::bump(vec![0.5, -0.2], 0.4, 1.7).unwrap();
        let s = SmoothedTest::new(&k, &f).unwrap();
        assert!(s.is_closed_form());
        // split the bump domain so the singularity at y is a cell corner
        for y in [[0.5, -0.2], [1.3, 0.4], [3.0, 2.0]] {
            let support = f.effective_support(1e-14).unwrap();
            let opts = CubatureOptions {
                initial_cell: 0.25,
                abs_tol: 1e-8,
                max_evaluations: 20_000_000,
                integrand_bound: None,
            };
            let direct = integrate_cells_adaptive(
                support.lower(),
                support.upper(),
                |x: &[f64]| {
                    let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                    p.green(r) * f.eval(x)
                },
                &opts,
            )
            .map(|e| e.value)
            .unwrap_or_else(|e| match e {
                crate::quadrature::QuadError::NoConvergence { estimate, .. } => estimate,
                _ => panic!(),
            });
            let v = s.eval(&y);
            assert!(((v - direct) / v).abs() < 1e-5, "y={y:?}: {v} vs {direct}");
        }
    }

    #[test]
    fn indicator_leaf_uses_cubature() {
        let p = KernelParams::new(2, 1.0).unwrap();
        let m = crate::kernel::MollifierParams::new(0.3).unwrap();
        let k = FieldKernel::mollified(p, m).unwrap();
        let f = TestFunction::BoxIndicator(Cuboid::cube(2, 0.0, 1.0).unwrap());
        let s = SmoothedTest::new(&k, &f).unwrap();
        assert!(!s.is_closed_form());
        let v = s.eval(&[0.5, 0.5]);
        assert!(v > 0.0 && v.is_finite());
    }
}
