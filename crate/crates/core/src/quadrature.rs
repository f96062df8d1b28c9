//! Numerical integration: Gauss–Legendre rules, adaptive Gauss–Kronrod on
//! intervals, composite tensor grids over boxes and an h-adaptive cubature
//! for bounded but rough integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge after {evaluations} evaluations (estimate {estimate:e}, error {error:e}, requested {requested:e})")]
    NoConvergence {
        estimate: f64,
        error: f64,
        requested: f64,
        evaluations: usize,
    },
    #[error("integrand returned a non-finite value at {at:?}")]
    NonFinite { at: Vec<f64> },
}

/// Values that can be integrated: real or complex.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Pairwise summation; the order of `values` fixes the result bit for bit.
pub fn pairwise_sum<V: QuadValue>(values: &[V]) -> V {
    match values.len() {
        0 => V::zero(),
        1 => values[0],
        n if n <= 8 => values[1..].iter().fold(values[0], |a, &b| a + b),
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                if n == 1 {
                    p0 = 1.0;
                    p1 = x;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<V: QuadValue>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> V) -> V {
        let mut s = V::zero();
        for (x, w) in self.on(a, b) {
            s = s + f(x) * w;
        }
        s
    }
}

/// An integral estimate with its error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<V: QuadValue>(f: &mut impl FnMut(f64) -> V, a: f64, b: f64) -> (V, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let k = kron * half;
    let g = gauss * half;
    (k, (k - g).magnitude())
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) integration over [a, b].
///
/// Stops when the summed error is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_adaptive<V: QuadValue>(
    mut f: impl FnMut(f64) -> V,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Estimate<V>, QuadError> {
    integrate_adaptive_breaks(&mut f, &[a, b], abs_tol, rel_tol, max_segments)
}

/// As [`integrate_adaptive`], starting from the given breakpoints.
pub fn integrate_adaptive_breaks<V: QuadValue>(
    f: &mut impl FnMut(f64) -> V,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Estimate<V>, QuadError> {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        let (v, e) = gk15(f, w[0], w[1]);
        evaluations += 15;
        if !v.is_finite_value() {
            return Err(QuadError::NonFinite { at: vec![w[0], w[1]] });
        }
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    loop {
        let total: V = pairwise_sum(&heap.iter().map(|s| s.value).collect::<Vec<_>>());
        let err: f64 = heap.iter().map(|s| s.error).sum();
        let target = abs_tol.max(rel_tol * total.magnitude());
        if err <= target {
            return Ok(Estimate {
                value: total,
                error: err,
                evaluations,
            });
        }
        if heap.len() >= max_segments {
            return Err(QuadError::NoConvergence {
                estimate: total.magnitude(),
                error: err,
                requested: target,
                evaluations,
            });
        }
        // split the worst few segments before re-summing
        let batch = (heap.len() / 8).max(1);
        for _ in 0..batch {
            let worst = heap.pop().expect("non-empty heap");
            let m = 0.5 * (worst.a + worst.b);
            if m <= worst.a || m >= worst.b {
                // cannot split further; keep it and give up on this one
                heap.push(Segment {
                    error: 0.0,
                    ..worst
                });
                continue;
            }
            for (a, b) in [(worst.a, m), (m, worst.b)] {
                let (v, e) = gk15(f, a, b);
                evaluations += 15;
                if !v.is_finite_value() {
                    return Err(QuadError::NonFinite { at: vec![a, b] });
                }
                heap.push(Segment {
                    a,
                    b,
                    value: v,
                    error: e,
                });
            }
        }
    }
}

/// Integral over [a, ∞) via x = a + s/(1 - s).
pub fn integrate_semi_infinite<V: QuadValue>(
    mut f: impl FnMut(f64) -> V,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Estimate<V>, QuadError> {
    let mut g = |s: f64| {
        if s >= 1.0 {
            return V::zero();
        }
        let q = 1.0 - s;
        let x = a + s / q;
        let v = f(x);
        if v.magnitude() == 0.0 {
            V::zero()
        } else {
            v * (1.0 / (q * q))
        }
    };
    integrate_adaptive_breaks(
        &mut g,
        &[0.0, 0.25, 0.5, 0.75, 0.9, 1.0],
        abs_tol,
        rel_tol,
        max_segments,
    )
}

/// Composite tensor-product Gauss–Legendre rule over an axis-aligned box.
#[derive(Clone, Debug)]
pub struct TensorGrid {
    axes: Vec<Vec<(f64, f64)>>,
}

impl TensorGrid {
    /// `breaks[k]` are the panel boundaries along axis k (sorted, at least two);
    /// each panel carries an `order`-point rule.
    pub fn from_breaks(breaks: &[Vec<f64>], order: usize) -> Self {
        let gl = GaussLegendre::new(order);
        let axes = breaks
            .iter()
            .map(|b| {
                b.windows(2)
                    .flat_map(|w| gl.on(w[0], w[1]).collect::<Vec<_>>())
                    .collect()
            })
            .collect();
        Self { axes }
    }

    /// Uniform panels on `[lower, upper]`, each axis additionally split at
    /// the given interior points.
    pub fn uniform(
        lower: &[f64],
        upper: &[f64],
        panels: usize,
        order: usize,
        splits: &[Vec<f64>],
    ) -> Self {
        let breaks: Vec<Vec<f64>> = (0..lower.len())
            .map(|k| axis_breaks(lower[k], upper[k], panels, splits.get(k).map(|v| &v[..])))
            .collect();
        Self::from_breaks(&breaks, order)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis(&self, k: usize) -> &[(f64, f64)] {
        &self.axes[k]
    }

    /// Visit every node in row-major order with its weight.
    pub fn for_each_node(&self, mut visit: impl FnMut(&[f64], f64)) {
        let d = self.dim();
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        if self.is_empty() {
            return;
        }
        loop {
            let mut w = 1.0;
            for k in 0..d {
                let (xk, wk) = self.axes[k][idx[k]];
                x[k] = xk;
                w *= wk;
            }
            visit(&x, w);
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < self.axes[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// Deterministic integral; slabs along axis 0 run in parallel and are
    /// combined in a fixed order.
    pub fn integrate<V: QuadValue>(&self, f: impl Fn(&[f64]) -> V + Sync) -> V {
        let d = self.dim();
        if d == 0 || self.is_empty() {
            return V::zero();
        }
        let rest = TensorGrid {
            axes: self.axes[1..].to_vec(),
        };
        let slabs: Vec<V> = self.axes[0]
            .par_iter()
            .map(|&(x0, w0)| {
                let mut point = vec![0.0; d];
                point[0] = x0;
                let mut acc = Vec::with_capacity(rest.len().max(1));
                if d == 1 {
                    acc.push(f(&point));
                } else {
                    rest.for_each_node(|xr, wr| {
                        point[1..].copy_from_slice(xr);
                        acc.push(f(&point) * wr);
                    });
                }
                pairwise_sum(&acc) * w0
            })
            .collect();
        pairwise_sum(&slabs)
    }
}

fn axis_breaks(a: f64, b: f64, panels: usize, splits: Option<&[f64]>) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect();
    if let Some(s) = splits {
        for &p in s {
            if p > a && p < b {
                v.push(p);
            }
        }
        v.sort_by(|x, y| x.total_cmp(y));
        v.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (b - a));
    }
    v
}

/// Tensor Gauss–Legendre integral over a box, doubling the panel count until
/// two successive estimates differ by at most `abs_tol`.
pub fn integrate_box_converged<V: QuadValue>(
    lower: &[f64],
    upper: &[f64],
    splits: &[Vec<f64>],
    f: impl Fn(&[f64]) -> V + Sync,
    abs_tol: f64,
    start_panels: usize,
    max_panels: usize,
) -> Result<Estimate<V>, QuadError> {
    const ORDER: usize = 8;
    let mut panels = start_panels.max(1);
    let grid = TensorGrid::uniform(lower, upper, panels, ORDER, splits);
    let mut prev = grid.integrate(&f);
    let mut evaluations = grid.len();
    if !prev.is_finite_value() {
        return Err(QuadError::NonFinite { at: lower.to_vec() });
    }
    loop {
        panels *= 2;
        let grid = TensorGrid::uniform(lower, upper, panels, ORDER, splits);
        let cur = grid.integrate(&f);
        evaluations += grid.len();
        let err = (cur - prev).magnitude();
        if err <= abs_tol {
            return Ok(Estimate {
                value: cur,
                error: err,
                evaluations,
            });
        }
        if panels >= max_panels {
            return Err(QuadError::NoConvergence {
                estimate: cur.magnitude(),
                error: err,
                requested: abs_tol,
                evaluations,
            });
        }
        prev = cur;
    }
}

/// Options for [`integrate_cells_adaptive`].
#[derive(Clone, Debug, PartialEq)]
pub struct CubatureOptions {
    /// Edge length of the initial uniform cells.
    pub initial_cell: f64,
    pub abs_tol: f64,
    pub max_evaluations: usize,
    /// Known bound on |integrand|; caps each cell's error at 2·bound·volume so
    /// cells around integrable singularities converge by shrinking.
    pub integrand_bound: Option<f64>,
}

struct Cell {
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: f64,
    error: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct CellRule {
    high: GaussLegendre,
    low: GaussLegendre,
}

impl CellRule {
    fn tensor(
        rule: &GaussLegendre,
        lower: &[f64],
        upper: &[f64],
        f: &impl Fn(&[f64]) -> f64,
        point: &mut [f64],
        evaluations: &mut usize,
    ) -> f64 {
        let d = lower.len();
        let n = rule.nodes.len();
        let total = n.pow(d as u32);
        let mut sum = 0.0;
        for flat in 0..total {
            let mut rem = flat;
            let mut w = 1.0;
            for k in 0..d {
                let i = rem % n;
                rem /= n;
                let half = 0.5 * (upper[k] - lower[k]);
                point[k] = 0.5 * (upper[k] + lower[k]) + half * rule.nodes[i];
                w *= half * rule.weights[i];
            }
            let v = f(point);
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            sum += w * v;
        }
        *evaluations += total;
        sum
    }

    fn apply(
        &self,
        lower: Vec<f64>,
        upper: Vec<f64>,
        f: &impl Fn(&[f64]) -> f64,
        bound: Option<f64>,
        evaluations: &mut usize,
    ) -> Cell {
        let mut point = vec![0.0; lower.len()];
        let hi = Self::tensor(&self.high, &lower, &upper, f, &mut point, evaluations);
        if hi == f64::INFINITY {
            return Cell {
                lower,
                upper,
                value: f64::INFINITY,
                error: 0.0,
            };
        }
        let lo = Self::tensor(&self.low, &lower, &upper, f, &mut point, evaluations);
        let mut error = if lo == f64::INFINITY {
            f64::INFINITY
        } else {
            (hi - lo).abs()
        };
        if let Some(b) = bound {
            let vol: f64 = lower.iter().zip(&upper).map(|(a, b)| b - a).product();
            error = error.min(2.0 * b * vol);
        }
        Cell {
            lower,
            upper,
            value: hi,
            error,
        }
    }
}

/// h-adaptive tensor Gauss–Legendre cubature over a box.
///
/// Each cell is integrated with 4- and 3-point tensor rules; the cell with
/// the largest error is bisected along every axis until the summed error is
/// below `abs_tol`. An integrand value of `+∞` anywhere makes the result `+∞`.
pub fn integrate_cells_adaptive(
    lower: &[f64],
    upper: &[f64],
    f: impl Fn(&[f64]) -> f64,
    opts: &CubatureOptions,
) -> Result<Estimate<f64>, QuadError> {
    let d = lower.len();
    let rule = CellRule {
        high: GaussLegendre::new(4),
        low: GaussLegendre::new(3),
    };
    let counts: Vec<usize> = (0..d)
        .map(|k| (((upper[k] - lower[k]) / opts.initial_cell).ceil() as usize).max(1))
        .collect();
    let total: usize = counts.iter().product();
    let mut evaluations = 0;
    let mut heap = BinaryHeap::with_capacity(total * 2);
    for flat in 0..total {
        let mut rem = flat;
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for k in 0..d {
            let i = rem % counts[k];
            rem /= counts[k];
            let h = (upper[k] - lower[k]) / counts[k] as f64;
            lo[k] = lower[k] + h * i as f64;
            hi[k] = if i + 1 == counts[k] {
                upper[k]
            } else {
                lower[k] + h * (i + 1) as f64
            };
        }
        let cell = rule.apply(lo, hi, &f, opts.integrand_bound, &mut evaluations);
        if cell.value == f64::INFINITY {
            return Ok(Estimate {
                value: f64::INFINITY,
                error: 0.0,
                evaluations,
            });
        }
        heap.push(cell);
    }
    let mut err: f64 = heap.iter().map(|c| c.error).sum();
    let mut since_resum = 0usize;
    while err > opts.abs_tol {
        if evaluations > opts.max_evaluations {
            let value: f64 = heap.iter().map(|c| c.value).sum();
            return Err(QuadError::NoConvergence {
                estimate: value,
                error: err,
                requested: opts.abs_tol,
                evaluations,
            });
        }
        let worst = heap.pop().expect("non-empty");
        err -= worst.error;
        for child in 0..(1usize << d) {
            let mut lo = worst.lower.clone();
            let mut hi = worst.upper.clone();
            for k in 0..d {
                let mid = 0.5 * (worst.lower[k] + worst.upper[k]);
                if child >> k & 1 == 0 {
                    hi[k] = mid;
                } else {
                    lo[k] = mid;
                }
            }
            let cell = rule.apply(lo, hi, &f, opts.integrand_bound, &mut evaluations);
            if cell.value == f64::INFINITY {
                return Ok(Estimate {
                    value: f64::INFINITY,
                    error: 0.0,
                    evaluations,
                });
            }
            err += cell.error;
            heap.push(cell);
        }
        since_resum += 1;
        if since_resum >= 4096 {
            err = heap.iter().map(|c| c.error).sum();
            since_resum = 0;
        }
    }
    let mut cells = heap.into_vec();
    cells.sort_by(|a, b| {
        for k in 0..d {
            match a.lower[k].total_cmp(&b.lower[k]) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    });
    let values: Vec<f64> = cells.iter().map(|c| c.value).collect();
    Ok(Estimate {
        value: pairwise_sum(&values),
        error: err.max(0.0),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in [1, 2, 5, 8, 16] {
            let gl = GaussLegendre::new(n);
            let wsum: f64 = gl.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-14);
            for p in 0..(2 * n) {
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                let got: f64 = gl.integrate(-1.0, 1.0, |x| x.powi(p as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = integrate_adaptive(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 0.0, 10_000).unwrap();
        assert!((est.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn semi_infinite_gaussian() {
        let est =
            integrate_semi_infinite(|x: f64| (-x * x).exp(), 0.0, 1e-13, 0.0, 1000).unwrap();
        assert!((est.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn complex_integrand() {
        let est = integrate_adaptive(
            |x: f64| Complex64::new(0.0, x).exp(),
            0.0,
            std::f64::consts::PI,
            1e-13,
            0.0,
            100,
        )
        .unwrap();
        assert!((est.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn tensor_grid_gaussian_box() {
        let g = TensorGrid::uniform(&[-3.0, -2.0], &[4.0, 5.0], 6, 8, &[]);
        let v: f64 = g.integrate(|x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp());
        let e = |a: f64, b: f64| {
            (std::f64::consts::PI / 2.0).sqrt()
                * (libm::erf(b / 2f64.sqrt()) - libm::erf(a / 2f64.sqrt()))
        };
        assert!((v - e(-3.0, 4.0) * e(-2.0, 5.0)).abs() < 1e-12);
    }

    #[test]
    fn tensor_visit_order_is_row_major() {
        let g = TensorGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], 1, 2, &[]);
        let mut pts = Vec::new();
        g.for_each_node(|x, _| pts.push(x.to_vec()));
        assert_eq!(pts.len(), 4);
        assert!(pts[0][0] == pts[1][0] && pts[0][1] < pts[1][1]);
    }

    #[test]
    fn converged_box_with_discontinuity_split() {
        let est = integrate_box_converged(
            &[0.0, 0.0],
            &[2.0, 2.0],
            &[vec![0.7], vec![1.3]],
            |x| if x[0] < 0.7 && x[1] > 1.3 { 1.0 } else { 0.0 },
            1e-12,
            2,
            64,
        )
        .unwrap();
        assert!((est.value - 0.7 * 0.7).abs() < 1e-12);
    }

    #[test]
    fn cubature_integrable_singularity() {
        // ∫_{[-1,1]^2} 1/|x| dx = 8 asinh(1)
        let opts = CubatureOptions {
            initial_cell: 0.5,
            abs_tol: 1e-6,
            max_evaluations: 5_000_000,
            integrand_bound: None,
        };
        let est = integrate_cells_adaptive(
            &[-1.0, -1.0],
            &[1.0, 1.0],
            |x| 1.0 / (x[0] * x[0] + x[1] * x[1]).sqrt(),
            &opts,
        )
        .unwrap();
        assert!((est.value - 8.0 * 1f64.asinh()).abs() < 1e-5, "{}", est.value);
    }

    #[test]
    fn cubature_bounded_oscillatory_singularity() {
        // ∫ (cos(1/|x|) - 1) e^{-|x|^2} dx over the plane, polar form as reference
        let radial = integrate_adaptive(
            |u: f64| {
                let r = u.exp();
                2.0 * std::f64::consts::PI * r * r * ((1.0 / r).cos() - 1.0) * (-r * r).exp()
            },
            -14.0,
            2.0,
            1e-13,
            0.0,
            100_000,
        )
        .unwrap()
        .value;
        let opts = CubatureOptions {
            initial_cell: 0.25,
            abs_tol: 1e-7,
            max_evaluations: 50_000_000,
            integrand_bound: Some(2.0),
        };
        let est = integrate_cells_adaptive(
            &[-6.0, -6.0],
            &[6.0, 6.0],
            |x| {
                let r2 = x[0] * x[0] + x[1] * x[1];
                ((1.0 / r2.sqrt()).cos() - 1.0) * (-r2).exp()
            },
            &opts,
        )
        .unwrap();
        assert!((est.value - radial).abs() < 1e-6, "{} vs {}", est.value, radial);
    }

    #[test]
    fn cubature_infinite_short_circuit() {
        let opts = CubatureOptions {
            initial_cell: 0.25,
            abs_tol: 1e-8,
            max_evaluations: 1_000_000,
            integrand_bound: None,
        };
        let est = integrate_cells_adaptive(
            &[0.0, 0.0],
            &[1.0, 1.0],
            |x| if x[0] > 0.5 { f64::INFINITY } else { 0.0 },
            &opts,
        )
        .unwrap();
        assert_eq!(est.value, f64::INFINITY);
    }
}
