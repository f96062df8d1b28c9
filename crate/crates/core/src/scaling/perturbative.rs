use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{chunk_stream, ScalingError, CHUNK};
use crate::field::{green_inner, pair_field, FieldContext, FieldKernel, SmoothedTest, DEFAULT_PADDING};
use crate::kernel::{smoothed_resolvent, KernelParams, MollifierParams};
use crate::noise::{
    cf_from_exponent, expm1_i, levy_khinchine_exponents, sample_configuration, CfQuadrature, ChargeLaw, Cuboid,
    TestFunction,
};
use crate::potential::PotentialSpec;
use crate::quadrature::{integrate_box_converged, pairwise_sum, TensorGrid};

/// Reference field whose joint characteristic functionals enter A_n.
#[derive(Clone, Debug, PartialEq)]
pub enum PerturbativeModel {
    /// Rescaled Poisson field: activity z, charges s/√z.
    Poisson { z: f64, law: ChargeLaw },
    /// Centered Gaussian field with covariance variance·Q.
    Gaussian { variance: f64 },
}

impl PerturbativeModel {
    /// The z → ∞ limit of the rescaled Poisson field with this law.
    pub fn gaussian_limit(law: &ChargeLaw) -> Self {
        Self::Gaussian {
            variance: law.second_moment(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbativeOptions {
    pub cf: CfQuadrature,
    pub outer_abs_tol: f64,
    pub outer_start_panels: usize,
    pub outer_max_panels: usize,
}

impl Default for PerturbativeOptions {
    fn default() -> Self {
        Self {
            cf: CfQuadrature {
                abs_tol: 1e-9,
                start_panels: 8,
                max_panels: 1024,
            },
            outer_abs_tol: 1e-7,
            outer_start_panels: 1,
            outer_max_panels: 16,
        }
    }
}

/// Everything A_n depends on apart from n, t and the reference model.
#[derive(Clone, Debug)]
pub struct PerturbativeSetup {
    params: KernelParams,
    eps: f64,
    region: Cuboid,
    f: TestFunction,
    /// (w_k, α_k) of v = Σ w_k (cos(α_k φ) − 1)
    terms: Vec<(f64, f64)>,
    mollified: FieldKernel,
    smoothed: SmoothedTest,
    q_ff: f64,
    noise_region: Cuboid,
}

impl PerturbativeSetup {
    /// `region` is the box of the y integrals; the Poisson particles fill it
    /// together with the support of f, padded by `n_pad` decay lengths.
    pub fn new(
        params: KernelParams,
        eps: f64,
        region: Cuboid,
        f: TestFunction,
        spec: &PotentialSpec,
        n_pad: f64,
    ) -> Result<Self, ScalingError> {
        if !(eps > 0.0) {
            return Err(ScalingError::Domain(format!(
                "the expansion needs a mollified kernel, got ε = {eps}"
            )));
        }
        let terms = match spec {
            PotentialSpec::Trigonometric { terms } => terms.clone(),
            PotentialSpec::RenormalizedCosine { alpha, normalizer } => vec![(1.0 / normalizer, *alpha)],
            other => {
                return Err(ScalingError::Domain(format!("expansion needs a cosine density, got {other}")));
            }
        };
        let green = FieldKernel::green(params.clone())?;
        let mollified = FieldKernel::mollified(params.clone(), MollifierParams::new(eps)?)?;
        let smoothed = SmoothedTest::new(&green, &f)?;
        let q_ff = if f.is_zero() { 0.0 } else { green_inner(&green, &f, &f)? };
        let hull = match f.effective_support(1e-16) {
            Some(s) => hull(&region, &s)?,
            None => region.clone(),
        };
        let noise_region = hull.padded(n_pad / params.mass());
        Ok(Self {
            params,
            eps,
            region,
            f,
            terms,
            mollified,
            smoothed,
            q_ff,
            noise_region,
        })
    }

    pub fn region(&self) -> &Cuboid {
        &self.region
    }

    pub fn noise_region(&self) -> &Cuboid {
        &self.noise_region
    }

    /// ∫ (G * f)(x) G_ε(x − y) dx for bump leaves.
    fn cross(&self, y: &[f64]) -> Result<f64, ScalingError> {
        let d = self.params.dim() as f64;
        let mut total = 0.0;
        for leaf in self.f.terms() {
            match leaf {
                TestFunction::GaussianBump { center, width, amplitude } => {
                    if *amplitude == 0.0 {
                        continue;
                    }
                    let dist = center.iter().zip(y).map(|(c, x)| (c - x) * (c - x)).sum::<f64>().sqrt();
                    let b = 0.5 * (width * width + self.eps * self.eps);
                    total += amplitude
                        * (2.0 * PI * width * width).powf(d / 2.0)
                        * smoothed_resolvent(&self.params, b, dist)?;
                }
                _ => {
                    return Err(ScalingError::Domain(
                        "the Gaussian cross covariance is implemented for bump test functions".into(),
                    ))
                }
            }
        }
        Ok(total)
    }

    /// E[exp(i(t⟨φ, f⟩ + Σ u_i φ_ε(y_i)))].
    pub fn joint_cf(
        &self,
        model: &PerturbativeModel,
        t: f64,
        freqs: &[(f64, &[f64])],
        quad: &CfQuadrature,
    ) -> Result<Complex64, ScalingError> {
        if t == 0.0 && freqs.is_empty() {
            return Ok(Complex64::new(1.0, 0.0));
        }
        match model {
            PerturbativeModel::Gaussian { variance } => {
                let mut q = t * t * self.q_ff;
                for (i, &(u, y)) in freqs.iter().enumerate() {
                    if t != 0.0 {
                        q += 2.0 * t * u * self.cross(y)?;
                    }
                    for (j, &(v, x)) in freqs.iter().enumerate().take(i + 1) {
                        let dist = y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                        let c = smoothed_resolvent(&self.params, self.eps * self.eps, dist)?;
                        q += if i == j { u * v * c } else { 2.0 * u * v * c };
                    }
                }
                Ok(Complex64::new((-0.5 * variance * q).exp(), 0.0))
            }
            PerturbativeModel::Poisson { z, law } => {
                let d = self.params.dim();
                let mut splits = self.f.axis_breaks();
                splits.resize(d, Vec::new());
                for &(_, y) in freqs {
                    for k in 0..d {
                        splits[k].push(y[k]);
                    }
                }
                let side = (0..d).map(|k| self.noise_region.side(k)).fold(0.0, f64::max);
                let natural = (side / self.f.min_scale().min(self.eps)).ceil() as usize;
                let quad = CfQuadrature {
                    start_panels: quad.start_panels.max(natural.min(64)),
                    ..quad.clone()
                };
                let h = |x: &[f64]| {
                    let mut v = t * self.smoothed.eval(x);
                    for &(u, y) in freqs {
                        let r = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                        v += u * self.mollified.radial(r);
                    }
                    v
                };
                let e = levy_khinchine_exponents(&self.noise_region, *z, law, 1.0 / z.sqrt(), &[1.0], h, &splits, &quad)?;
                Ok(cf_from_exponent(e[0]))
            }
        }
    }

    /// A_n(t) = (1/n!) ∫_{Λⁿ} E[e^{it⟨φ,f⟩} v(φ_ε(y₁))⋯v(φ_ε(y_n))] dy, n ≤ 2.
    ///
    /// Each cos(αφ) − 1 is split into ½e^{iαφ} + ½e^{−iαφ} − 1, so the
    /// integrand is a combination of joint characteristic functionals. The
    /// weights w_k are applied after integrating, which keeps A_n exactly
    /// linear in them.
    pub fn coefficient(
        &self,
        n: usize,
        t: f64,
        model: &PerturbativeModel,
        opts: &PerturbativeOptions,
    ) -> Result<Complex64, ScalingError> {
        if n > 2 {
            return Err(ScalingError::Domain(format!("orders above 2 are not supported, got {n}")));
        }
        if n == 0 {
            return self.joint_cf(model, t, &[], &opts.cf);
        }
        let grid = match model {
            PerturbativeModel::Poisson { z, law } => Some(self.converged_grid(*z, law, t, &opts.cf)?),
            PerturbativeModel::Gaussian { .. } => None,
        };
        let cf0 = match (&grid, model) {
            (Some(g), PerturbativeModel::Poisson { z, law }) => {
                cf_from_exponent(self.poisson_exponents(g, *z, law, t, &[], &[vec![]])[0])
            }
            _ => self.joint_cf(model, t, &[], &opts.cf)?,
        };
        let d = self.params.dim();
        let lower: Vec<f64> = (0..n).flat_map(|_| self.region.lower().to_vec()).collect();
        let upper: Vec<f64> = (0..n).flat_map(|_| self.region.upper().to_vec()).collect();
        let factorial = if n == 2 { 2.0 } else { 1.0 };
        let k = self.terms.len();
        let mut splits = vec![Vec::new(); n * d];
        for i in 0..n {
            for (a, s) in self.f.axis_breaks().into_iter().enumerate().take(d) {
                splits[i * d + a] = s;
            }
        }
        // sign patterns: digit 0 → +α, 1 → −α, 2 → the "−1" term
        let patterns: Vec<Vec<usize>> = (0..3usize.pow(n as u32))
            .map(|p| (0..n).map(|i| (p / 3usize.pow(i as u32)) % 3).collect())
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for idx in 0..k.pow(n as u32) {
            let ks: Vec<usize> = (0..n).map(|i| (idx / k.pow(i as u32)) % k).collect();
            let alphas: Vec<f64> = ks.iter().map(|&j| self.terms[j].1).collect();
            let failure: Mutex<Option<ScalingError>> = Mutex::new(None);
            let integrand = |y: &[f64]| -> Complex64 {
                let ys: Vec<&[f64]> = y.chunks(d).collect();
                let coef = |pat: &[usize]| -> f64 {
                    pat.iter().map(|&c| if c == 2 { -1.0 } else { 0.5 }).product()
                };
                let freqs = |pat: &[usize]| -> Vec<f64> {
                    pat.iter()
                        .zip(&alphas)
                        .map(|(&c, &a)| match c {
                            0 => a,
                            1 => -a,
                            _ => 0.0,
                        })
                        .collect()
                };
                let mut acc = cf0 * coef(&vec![2; n]);
                let live: Vec<&Vec<usize>> = patterns.iter().filter(|p| p.iter().any(|&c| c != 2)).collect();
                match (&grid, model) {
                    (Some(g), PerturbativeModel::Poisson { z, law }) => {
                        let us: Vec<Vec<f64>> = live.iter().map(|p| freqs(p)).collect();
                        let e = self.poisson_exponents(g, *z, law, t, &ys, &us);
                        for (p, e) in live.iter().zip(e) {
                            acc += cf_from_exponent(e) * coef(p);
                        }
                    }
                    _ => {
                        for p in live {
                            let fr: Vec<(f64, &[f64])> = freqs(p)
                                .into_iter()
                                .zip(&ys)
                                .filter(|(u, _)| *u != 0.0)
                                .map(|(u, y)| (u, *y))
                                .collect();
                            match self.joint_cf(model, t, &fr, &opts.cf) {
                                Ok(c) => acc += c * coef(p),
                                Err(e) => {
                                    failure.lock().unwrap().get_or_insert(e);
                                }
                            }
                        }
                    }
                }
                acc
            };
            let est = integrate_box_converged(
                &lower,
                &upper,
                &splits,
                integrand,
                opts.outer_abs_tol,
                opts.outer_start_panels,
                opts.outer_max_panels,
            );
            if let Some(e) = failure.into_inner().unwrap() {
                return Err(e);
            }
            let weight: f64 = ks.iter().map(|&j| self.terms[j].0).product();
            total += est?.value / factorial * weight;
        }
        Ok(total)
    }

    fn lk_grid(&self, panels: usize) -> LkGrid {
        let d = self.params.dim();
        let mut splits = self.f.axis_breaks();
        splits.resize(d, Vec::new());
        let grid = TensorGrid::uniform(self.noise_region.lower(), self.noise_region.upper(), panels, 8, &splits);
        let mut nodes = Vec::with_capacity(grid.len() * d);
        let mut weights = Vec::with_capacity(grid.len());
        grid.for_each_node(|x, w| {
            nodes.extend_from_slice(x);
            weights.push(w);
        });
        let g = nodes.par_chunks(d).map(|x| self.smoothed.eval(x)).collect();
        LkGrid { nodes, weights, g }
    }

    /// Poisson exponents for t g + Σ_j u_j G_ε(· − y_j), one per row of `us`,
    /// on a fixed grid.
    fn poisson_exponents(
        &self,
        grid: &LkGrid,
        z: f64,
        law: &ChargeLaw,
        t: f64,
        ys: &[&[f64]],
        us: &[Vec<f64>],
    ) -> Vec<Complex64> {
        const BLOCK: usize = 4096;
        let d = self.params.dim();
        let atoms: Vec<(f64, f64)> = law.atoms().iter().map(|&(s, p)| (s / z.sqrt(), p)).collect();
        let blocks: Vec<Vec<Complex64>> = grid
            .weights
            .par_chunks(BLOCK)
            .enumerate()
            .map(|(b, ws)| {
                let mut acc = vec![Complex64::new(0.0, 0.0); us.len()];
                let mut ge = vec![0.0; ys.len()];
                for (i, &w) in ws.iter().enumerate() {
                    let node = b * BLOCK + i;
                    let x = &grid.nodes[node * d..(node + 1) * d];
                    for (j, y) in ys.iter().enumerate() {
                        let r = x.iter().zip(*y).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                        ge[j] = self.mollified.radial(r);
                    }
                    let base = t * grid.g[node];
                    for (a, u) in acc.iter_mut().zip(us) {
                        let theta = base + u.iter().zip(&ge).map(|(u, g)| u * g).sum::<f64>();
                        let mut e = Complex64::new(0.0, 0.0);
                        for &(s, p) in &atoms {
                            e += expm1_i(s * theta) * p;
                        }
                        *a += e * w;
                    }
                }
                acc
            })
            .collect();
        (0..us.len())
            .map(|k| {
                let col: Vec<Complex64> = blocks.iter().map(|b| b[k]).collect();
                pairwise_sum(&col) * z
            })
            .collect()
    }

    /// Doubles the panel count until the exponents at a probe point (the
    /// box centre, every ±α_k) move by at most the tolerance.
    fn converged_grid(&self, z: f64, law: &ChargeLaw, t: f64, quad: &CfQuadrature) -> Result<LkGrid, ScalingError> {
        let d = self.params.dim();
        let side = (0..d).map(|k| self.noise_region.side(k)).fold(0.0, f64::max);
        let natural = (side / self.f.min_scale().min(self.eps)).ceil() as usize;
        let mut panels = quad.start_panels.max(natural.div_ceil(2).min(64));
        let center = self.region.center();
        let mut us: Vec<Vec<f64>> = vec![vec![0.0]];
        for &(_, a) in &self.terms {
            us.push(vec![a]);
            us.push(vec![-a]);
        }
        let mut grid = self.lk_grid(panels);
        let mut prev = self.poisson_exponents(&grid, z, law, t, &[&center], &us);
        loop {
            panels *= 2;
            let next = self.lk_grid(panels);
            let cur = self.poisson_exponents(&next, z, law, t, &[&center], &us);
            let err = cur.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if err <= quad.abs_tol {
                // the coarser grid already meets the tolerance
                return Ok(grid);
            }
            if panels >= quad.max_panels {
                return Err(ScalingError::Quadrature(crate::quadrature::QuadError::NoConvergence {
                    estimate: cur.iter().map(|c| c.norm()).fold(0.0, f64::max),
                    error: err,
                    requested: quad.abs_tol,
                    evaluations: panels,
                }));
            }
            grid = next;
            prev = cur;
        }
    }
}

struct LkGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    g: Vec<f64>,
}

fn hull(a: &Cuboid, b: &Cuboid) -> Result<Cuboid, ScalingError> {
    Ok(Cuboid::new(
        a.lower().iter().zip(b.lower()).map(|(x, y)| x.min(*y)).collect(),
        a.upper().iter().zip(b.upper()).map(|(x, y)| x.max(*y)).collect(),
    )?)
}

/// A_n(t) for f, ε, the reference model and a cosine density on `region`.
#[allow(clippy::too_many_arguments)]
pub fn perturbative_coefficient(
    n: usize,
    t: f64,
    params: &KernelParams,
    f: &TestFunction,
    eps: f64,
    model: &PerturbativeModel,
    spec: &PotentialSpec,
    region: &Cuboid,
    opts: &PerturbativeOptions,
) -> Result<Complex64, ScalingError> {
    let setup = PerturbativeSetup::new(params.clone(), eps, region.clone(), f.clone(), spec, DEFAULT_PADDING)?;
    setup.coefficient(n, t, model, opts)
}

/// Direct Monte Carlo estimate of A₁(t) for the rescaled Poisson field:
/// mean of e^{it⟨φ,f⟩} ∫_Λ v(φ_ε(y)) dy, the y integral on a fixed
/// Gauss–Legendre grid with `y_panels` panels per axis. Returns the mean and
/// the standard errors of its real and imaginary parts.
pub fn first_order_mc(
    setup: &PerturbativeSetup,
    z: f64,
    law: &ChargeLaw,
    t: f64,
    samples: usize,
    seed: u64,
    y_panels: usize,
) -> Result<(Complex64, f64, f64), ScalingError> {
    if samples < 2 {
        return Err(ScalingError::Domain("at least two samples are required".into()));
    }
    let green = FieldKernel::green(setup.params.clone())?;
    let grid = TensorGrid::uniform(setup.region.lower(), setup.region.upper(), y_panels.max(1), 8, &[]);
    let mut nodes = Vec::new();
    grid.for_each_node(|x, w| nodes.push((x.to_vec(), w)));
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Result<[f64; 4], ScalingError>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_stream(seed, 0, c);
            let mut s = [0.0; 4];
            for _ in 0..CHUNK.min(samples - c * CHUNK) {
                let config = sample_configuration(&setup.noise_region, z, law, &mut rng)?;
                let x = pair_field(&FieldContext::rescaled(&green, &config, z)?, &setup.smoothed);
                let moll = FieldContext::rescaled(&setup.mollified, &config, z)?;
                let mut v = 0.0;
                for (y, w) in &nodes {
                    let phi = moll.eval_unchecked(y);
                    v += w * setup
                        .terms
                        .iter()
                        .map(|&(wk, a)| wk * crate::potential::cos_minus_one(a * phi))
                        .sum::<f64>();
                }
                let val = Complex64::from_polar(1.0, t * x) * v;
                s[0] += val.re;
                s[1] += val.im;
                s[2] += val.re * val.re;
                s[3] += val.im * val.im;
            }
            Ok(s)
        })
        .collect();
    let mut s = [0.0; 4];
    for p in parts {
        let p = p?;
        for k in 0..4 {
            s[k] += p[k];
        }
    }
    let n = samples as f64;
    let (mr, mi) = (s[0] / n, s[1] / n);
    let var_r = ((s[2] / n - mr * mr) * n / (n - 1.0)).max(0.0);
    let var_i = ((s[3] / n - mi * mi) * n / (n - 1.0)).max(0.0);
    Ok((Complex64::new(mr, mi), (var_r / n).sqrt(), (var_i / n).sqrt()))
}
