use std::f64::consts::{PI, SQRT_2};

use super::{Cuboid, Isometry, NoiseError};

/// Test functions with closed-form integrals.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// A · exp(−|x − c|² / (2 w²))
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    /// 1 on the closed box, 0 elsewhere.
    BoxIndicator(Cuboid),
    FiniteSum(Vec<TestFunction>),
}

impl TestFunction {
    pub fn bump(center: Vec<f64>, width: f64, amplitude: f64) -> Result<Self, NoiseError> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(NoiseError::Domain(format!("bump width must be positive, got {width}")));
        }
        if !amplitude.is_finite() || center.iter().any(|c| !c.is_finite()) || center.is_empty() {
            return Err(NoiseError::Domain("bump center and amplitude must be finite".into()));
        }
        Ok(Self::GaussianBump {
            center,
            width,
            amplitude,
        })
    }

    pub fn sum(terms: Vec<TestFunction>) -> Result<Self, NoiseError> {
        let f = Self::FiniteSum(terms);
        if let Some(d) = f.dim() {
            let mut ok = true;
            f.for_each_term(&mut |t| ok &= t.dim() == Some(d));
            if !ok {
                return Err(NoiseError::Domain("summands differ in dimension".into()));
            }
        }
        Ok(f)
    }

    /// Dimension, or None for an empty sum.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::GaussianBump { center, .. } => Some(center.len()),
            Self::BoxIndicator(b) => Some(b.dim()),
            Self::FiniteSum(v) => v.iter().find_map(|t| t.dim()),
        }
    }

    /// Visit the non-sum leaves.
    pub fn for_each_term(&self, visit: &mut impl FnMut(&TestFunction)) {
        match self {
            Self::FiniteSum(v) => v.iter().for_each(|t| t.for_each_term(visit)),
            leaf => visit(leaf),
        }
    }

    pub fn terms(&self) -> Vec<&TestFunction> {
        let mut out = Vec::new();
        collect(self, &mut out);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms().iter().all(|t| match t {
            Self::GaussianBump { amplitude, .. } => *amplitude == 0.0,
            _ => false,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            Self::BoxIndicator(b) => {
                if b.contains(x) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::FiniteSum(v) => v.iter().map(|t| t.eval(x)).sum(),
        }
    }

    /// ∫_region f, or over ℝᵈ when `region` is None.
    pub fn integral(&self, region: Option<&Cuboid>) -> f64 {
        self.terms()
            .iter()
            .map(|t| leaf_product_integral(t, None, region))
            .sum()
    }

    /// ∫_region f·h.
    pub fn inner(&self, other: &TestFunction, region: Option<&Cuboid>) -> f64 {
        let a = self.terms();
        let b = other.terms();
        let mut s = 0.0;
        for x in &a {
            for y in &b {
                s += leaf_product_integral(x, Some(y), region);
            }
        }
        s
    }

    pub fn norm_sq(&self, region: Option<&Cuboid>) -> f64 {
        self.inner(self, region)
    }

    /// Axis-aligned box outside which |f| < tail·max|f| (boxes exactly).
    pub fn effective_support(&self, tail: f64) -> Option<Cuboid> {
        let k = (-2.0 * tail.ln()).sqrt();
        let mut acc: Option<Cuboid> = None;
        for t in self.terms() {
            let b = match t {
                Self::GaussianBump { center, width, .. } => Cuboid::new(
                    center.iter().map(|c| c - k * width).collect(),
                    center.iter().map(|c| c + k * width).collect(),
                )
                .ok(),
                Self::BoxIndicator(b) => Some(b.clone()),
                Self::FiniteSum(_) => None,
            };
            if let Some(b) = b {
                acc = Some(match acc {
                    None => b,
                    Some(a) => Cuboid::new(
                        (0..a.dim()).map(|i| a.lower()[i].min(b.lower()[i])).collect(),
                        (0..a.dim()).map(|i| a.upper()[i].max(b.upper()[i])).collect(),
                    )
                    .expect("hull of valid boxes"),
                });
            }
        }
        acc
    }

    /// Per-axis points where f or its scale changes; used as panel breaks.
    pub fn axis_breaks(&self) -> Vec<Vec<f64>> {
        let d = self.dim().unwrap_or(0);
        let mut out = vec![Vec::new(); d];
        for t in self.terms() {
            match t {
                Self::GaussianBump { center, width, .. } => {
                    for k in 0..d {
                        for j in [-6.0, -3.0, -1.5, 0.0, 1.5, 3.0, 6.0] {
                            out[k].push(center[k] + j * width);
                        }
                    }
                }
                Self::BoxIndicator(b) => {
                    for k in 0..d {
                        out[k].push(b.lower()[k]);
                        out[k].push(b.upper()[k]);
                    }
                }
                Self::FiniteSum(_) => {}
            }
        }
        for v in &mut out {
            v.sort_by(|a, b| a.total_cmp(b));
            v.dedup();
        }
        out
    }

    /// Smallest length scale (bump width or box side).
    pub fn min_scale(&self) -> f64 {
        self.terms()
            .iter()
            .map(|t| match t {
                Self::GaussianBump { width, .. } => *width,
                Self::BoxIndicator(b) => (0..b.dim()).map(|k| b.side(k)).fold(f64::INFINITY, f64::min),
                Self::FiniteSum(_) => f64::INFINITY,
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn transformed(&self, iso: &Isometry) -> TestFunction {
        match self {
            Self::GaussianBump {
                center,
                width,
                amplitude,
            } => Self::GaussianBump {
                center: iso.apply(center),
                width: *width,
                amplitude: *amplitude,
            },
            Self::BoxIndicator(b) => Self::BoxIndicator(b.transformed(iso)),
            Self::FiniteSum(v) => Self::FiniteSum(v.iter().map(|t| t.transformed(iso)).collect()),
        }
    }

    /// y ↦ scale · f(y/α).
    pub fn dilated(&self, alpha: f64, scale: f64) -> Result<TestFunction, NoiseError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(NoiseError::Domain(format!("dilation must be positive, got {alpha}")));
        }
        Ok(match self {
            Self::GaussianBump {
                center,
                width,
                amplitude,
            } => Self::GaussianBump {
                center: center.iter().map(|c| c * alpha).collect(),
                width: width * alpha,
                amplitude: amplitude * scale,
            },
            Self::BoxIndicator(b) => {
                if scale != 1.0 {
                    return Err(NoiseError::Domain(
                        "a box indicator cannot carry an amplitude".into(),
                    ));
                }
                Self::BoxIndicator(Cuboid::new(
                    b.lower().iter().map(|x| x * alpha).collect(),
                    b.upper().iter().map(|x| x * alpha).collect(),
                )?)
            }
            Self::FiniteSum(v) => Self::FiniteSum(
                v.iter()
                    .map(|t| t.dilated(alpha, scale))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }
}

fn collect<'a>(f: &'a TestFunction, out: &mut Vec<&'a TestFunction>) {
    match f {
        TestFunction::FiniteSum(v) => v.iter().for_each(|t| collect(t, out)),
        leaf => out.push(leaf),
    }
}

/// ∫_a^b exp(−(x − c)²/(2 s²)) dx without cancellation in the tails.
fn gauss_segment(a: f64, b: f64, c: f64, s: f64) -> f64 {
    let k = s * (PI / 2.0).sqrt();
    let u = (a - c) / (SQRT_2 * s);
    let v = (b - c) / (SQRT_2 * s);
    if u >= 0.0 {
        k * (libm::erfc(u) - libm::erfc(v))
    } else if v <= 0.0 {
        k * (libm::erfc(-v) - libm::erfc(-u))
    } else {
        k * (libm::erf(v) - libm::erf(u))
    }
}

/// Gaussian A exp(−|x−c|²/(2s²)) integrated over a box (or ℝᵈ).
fn gaussian_over(amplitude: f64, center: &[f64], s: f64, region: Option<&Cuboid>) -> f64 {
    let mut v = amplitude;
    for (k, &c) in center.iter().enumerate() {
        v *= match region {
            Some(b) => gauss_segment(b.lower()[k], b.upper()[k], c, s),
            None => s * (2.0 * PI).sqrt(),
        };
    }
    v
}

/// ∫_region a (or a·b) for leaves a, b.
fn leaf_product_integral(a: &TestFunction, b: Option<&TestFunction>, region: Option<&Cuboid>) -> f64 {
    use TestFunction::*;
    match (a, b) {
        (GaussianBump { center, width, amplitude }, None) => gaussian_over(*amplitude, center, *width, region),
        (BoxIndicator(bx), None) => clip(bx, region).map_or(0.0, |c| c.volume()),
        (
            GaussianBump { center: c1, width: w1, amplitude: a1 },
            Some(GaussianBump { center: c2, width: w2, amplitude: a2 }),
        ) => {
            let (v1, v2) = (w1 * w1, w2 * w2);
            let sep2: f64 = c1.iter().zip(c2).map(|(x, y)| (x - y) * (x - y)).sum();
            let amp = a1 * a2 * (-sep2 / (2.0 * (v1 + v2))).exp();
            let s = (v1 * v2 / (v1 + v2)).sqrt();
            let c: Vec<f64> = c1.iter().zip(c2).map(|(x, y)| (x * v2 + y * v1) / (v1 + v2)).collect();
            gaussian_over(amp, &c, s, region)
        }
        (GaussianBump { center, width, amplitude }, Some(BoxIndicator(bx)))
        | (BoxIndicator(bx), Some(GaussianBump { center, width, amplitude })) => match clip(bx, region) {
            Some(c) => gaussian_over(*amplitude, center, *width, Some(&c)),
            None => 0.0,
        },
        (BoxIndicator(x), Some(BoxIndicator(y))) => x
            .intersect(y)
            .and_then(|c| clip(&c, region))
            .map_or(0.0, |c| c.volume()),
        _ => unreachable!("sums are flattened before pairing"),
    }
}

fn clip(b: &Cuboid, region: Option<&Cuboid>) -> Option<Cuboid> {
    match region {
        Some(r) => b.intersect(r),
        None => Some(b.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_box_converged;

    fn quad(lower: &[f64], upper: &[f64], splits: &[Vec<f64>], f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        integrate_box_converged(lower, upper, splits, f, 1e-11, 4, 256).unwrap().value
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let region = Cuboid::cube(2, 0.0, 4.0).unwrap();
        let f = TestFunction::sum(vec![
            TestFunction::bump(vec![2.0, 1.5], 0.5, 1.3).unwrap(),
            TestFunction::bump(vec![0.3, 3.9], 0.8, -0.7).unwrap(),
            TestFunction::BoxIndicator(Cuboid::new(vec![1.0, 1.0], vec![3.0, 2.5]).unwrap()),
        ])
        .unwrap();
        let mut splits = f.axis_breaks();
        for s in &mut splits {
            s.retain(|x| *x > 0.0 && *x < 4.0);
        }
        let i1 = quad(region.lower(), region.upper(), &splits, |x| f.eval(x));
        assert!((f.integral(Some(&region)) - i1).abs() < 1e-9);
        let i2 = quad(region.lower(), region.upper(), &splits, |x| f.eval(x).powi(2));
        assert!((f.norm_sq(Some(&region)) - i2).abs() < 1e-9);
    }

    #[test]
    fn full_space_bump_norms() {
        let f = TestFunction::bump(vec![0.0, 0.0, 0.0], 0.7, 2.0).unwrap();
        let w2 = 0.49;
        assert!((f.integral(None) - 2.0 * (2.0 * PI * w2).powf(1.5)).abs() < 1e-12);
        assert!((f.norm_sq(None) - 4.0 * (PI * w2).powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn tail_segment_is_accurate() {
        // far tail where erf(b) − erf(a) would cancel
        let v = gauss_segment(10.0, 11.0, 0.0, 1.0);
        let want = (PI / 2.0).sqrt() * (libm::erfc(10.0 / SQRT_2) - libm::erfc(11.0 / SQRT_2));
        assert!(v > 0.0 && ((v - want) / want).abs() < 1e-14);
    }

    #[test]
    fn zero_function() {
        let f = TestFunction::bump(vec![0.0], 1.0, 0.0).unwrap();
        assert!(f.is_zero());
        assert!(TestFunction::bump(vec![0.0], 0.0, 1.0).is_err());
    }
}
