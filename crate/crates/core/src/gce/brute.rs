use std::sync::Arc;

use super::{GceConfig, GceError};
use crate::field::FieldKernel;
use crate::noise::ChargeConfiguration;
use crate::potential::{interaction_energy, PotentialSpec};

/// Observable for the brute-force oracle, with the growth bound the
/// truncation estimate needs.
#[derive(Clone)]
pub enum BruteObservable {
    /// N, bounded by n.
    Count,
    Constant(f64),
    Function {
        f: Arc<dyn Fn(&ChargeConfiguration) -> f64 + Send + Sync>,
        /// sup |O| over n-particle configurations.
        bound: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    },
}

impl BruteObservable {
    fn eval(&self, c: &ChargeConfiguration) -> f64 {
        match self {
            Self::Count => c.len() as f64,
            Self::Constant(v) => *v,
            Self::Function { f, .. } => f(c),
        }
    }

    fn bound(&self, n: usize) -> f64 {
        match self {
            Self::Count => n as f64,
            Self::Constant(v) => v.abs(),
            Self::Function { bound, .. } => bound(n),
        }
    }

    fn of_count(&self) -> Option<fn(usize, f64) -> f64> {
        match self {
            Self::Count => Some(|n, _| n as f64),
            Self::Constant(_) => Some(|_, v| v),
            Self::Function { .. } => None,
        }
    }

    fn constant(&self) -> f64 {
        match self {
            Self::Constant(v) => *v,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceOptions {
    /// Midpoint cells per axis for every particle position.
    pub cells_per_axis: usize,
    /// Largest acceptable truncation bound.
    pub tolerance: f64,
    /// Refuse generic enumerations with more leaves than this.
    pub max_leaves: u64,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self {
            cells_per_axis: 16,
            tolerance: 1e-3,
            max_leaves: 2_000_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForce {
    pub expectation: f64,
    pub truncation_bound: f64,
    /// w_n = (z|Λ|)ⁿ/n! · E_unif[e^{−λU}] for n ≤ n_max, so that
    /// P(N = n) ∝ w_n.
    pub weights: Vec<f64>,
    /// Same with the observable inside the average.
    pub observable_weights: Vec<f64>,
}

/// Ξ⁻¹ Σ_{n ≤ n_max} (z|Λ|)ⁿ/n! E[O e^{−λU}] over uniform positions on a
/// midpoint grid and law-distributed charges.
pub fn brute_force_gce(
    cfg: &GceConfig,
    n_max: usize,
    observable: &BruteObservable,
    opts: &BruteForceOptions,
) -> Result<BruteForce, GceError> {
    cfg.validate()?;
    if opts.cells_per_axis == 0 {
        return Err(GceError::Config("cells_per_axis must be positive".into()));
    }
    let mu = cfg.mean_occupancy();
    let hs = hard_spheres(cfg);
    let (avg, avg_o) = match (hs, observable.of_count()) {
        (Some(excl), Some(g)) if n_max <= 3 => {
            let p = hard_sphere_averages(cfg, excl, opts.cells_per_axis, n_max);
            let c = observable.constant();
            let o = p.iter().enumerate().map(|(n, &pn)| g(n, c) * pn).collect();
            (p, o)
        }
        _ => enumerate_averages(cfg, n_max, observable, opts, hs.is_some())?,
    };
    let mut weights = Vec::with_capacity(n_max + 1);
    let mut observable_weights = Vec::with_capacity(n_max + 1);
    let mut term = 1.0;
    for n in 0..=n_max {
        if n > 0 {
            term *= mu / n as f64;
        }
        weights.push(term * avg[n]);
        observable_weights.push(term * avg_o[n]);
    }
    let xi: f64 = weights.iter().sum();
    let expectation = observable_weights.iter().sum::<f64>() / xi;
    let truncation_bound = tail_bound(cfg, n_max, observable, hs, avg[n_max], expectation, xi);
    if !(truncation_bound <= opts.tolerance) {
        return Err(GceError::Truncation {
            bound: truncation_bound,
            tolerance: opts.tolerance,
        });
    }
    Ok(BruteForce {
        expectation,
        truncation_bound,
        weights,
        observable_weights,
    })
}

/// Exclusion distance when the weight is the unit hard-sphere indicator.
fn hard_spheres(cfg: &GceConfig) -> Option<f64> {
    let (FieldKernel::Indicator(k), PotentialSpec::HardWall { threshold }) = (&cfg.kernel, &cfg.potential) else {
        return None;
    };
    if cfg.lambda == 0.0 || cfg.law.atoms() != [(1.0, 1.0)] || *threshold > 2.0 {
        return None;
    }
    // θ ≤ 1: a single particle already reaches the wall
    Some(if *threshold <= 1.0 { f64::INFINITY } else { 2.0 * k.radius() })
}

/// Bound on the error of stopping at n_max: with Ξ_t ≥ 1 and
/// A, Ξ the omitted parts, |E − E_t| ≤ (|A| + |E_t| Ξ)/Ξ_t. Omitted
/// averages of e^{−λU} are bounded by e^{λ b V} (b the negative part of v,
/// V the integration volume), or for hard spheres by the last computed
/// average times the largest free volume fraction per added particle.
fn tail_bound(
    cfg: &GceConfig,
    n_max: usize,
    observable: &BruteObservable,
    hs: Option<f64>,
    last_avg: f64,
    expectation: f64,
    xi: f64,
) -> f64 {
    let mu = cfg.mean_occupancy();
    let (scale, ratio) = match hs {
        Some(excl) => {
            let d = cfg.region.dim();
            let side = excl / (d as f64).sqrt();
            let covered: f64 = (0..d).map(|k| side.min(0.5 * cfg.region.side(k))).product();
            (last_avg, (1.0 - covered / cfg.region.volume()).max(0.0))
        }
        None => {
            let neg = match &cfg.potential {
                PotentialSpec::Trigonometric { terms } => 2.0 * terms.iter().map(|t| t.0.max(0.0)).sum::<f64>(),
                PotentialSpec::RenormalizedCosine { normalizer, .. } => 2.0 / normalizer,
                _ => 0.0,
            };
            let vol = cfg.domain.integration_box(&cfg.region, &cfg.kernel).volume();
            ((cfg.lambda * neg * vol).exp(), 1.0)
        }
    };
    // ln of μⁿ/n!
    let mut log_term: f64 = (1..=n_max).map(|k| (mu / k as f64).ln()).sum();
    let mut a_tail = 0.0;
    let mut xi_tail = 0.0;
    let mut factor = scale;
    let mut n = n_max;
    loop {
        n += 1;
        log_term += (mu / n as f64).ln();
        factor *= ratio;
        let t = log_term.exp() * factor;
        xi_tail += t;
        a_tail += observable.bound(n) * t;
        if (n as f64 > 2.0 * mu + 20.0 && t <= 1e-17 * (xi_tail + xi)) || t == 0.0 || n > n_max + 100_000 {
            break;
        }
    }
    (a_tail + expectation.abs() * xi_tail) / xi
}

/// Averages of e^{−λU} (and O e^{−λU}) for n = 0..=n_max over the grid,
/// by enumerating multisets of (cell, charge) items with their
/// multinomial multiplicities.
fn enumerate_averages(
    cfg: &GceConfig,
    n_max: usize,
    observable: &BruteObservable,
    opts: &BruteForceOptions,
    hereditary: bool,
) -> Result<(Vec<f64>, Vec<f64>), GceError> {
    let d = cfg.region.dim();
    let k = opts.cells_per_axis;
    let cells = k.pow(d as u32);
    let centers: Vec<Vec<f64>> = (0..cells)
        .map(|mut c| {
            (0..d)
                .map(|axis| {
                    let i = c % k;
                    c /= k;
                    cfg.region.lower()[axis] + cfg.region.side(axis) * (i as f64 + 0.5) / k as f64
                })
                .collect()
        })
        .collect();
    let atoms = cfg.law.atoms();
    let items: Vec<(usize, f64, f64)> = (0..cells)
        .flat_map(|c| atoms.iter().map(move |&(s, p)| (c, s, p / cells as f64)))
        .collect();
    let mut leaves = 0u64;
    for n in 0..=n_max {
        leaves = leaves.saturating_add(multisets(items.len() as u64, n as u64));
    }
    if leaves > opts.max_leaves {
        return Err(GceError::Config(format!(
            "{leaves} grid configurations exceed the budget of {}",
            opts.max_leaves
        )));
    }
    let mut avg = vec![0.0; n_max + 1];
    let mut avg_o = vec![0.0; n_max + 1];
    let mut walker = Walker {
        cfg,
        observable,
        centers: &centers,
        items: &items,
        hereditary,
        picks: Vec::new(),
        config: ChargeConfiguration::empty(cfg.region.clone()),
    };
    for n in 0..=n_max {
        let (a, o) = walker.level(n, 0, 1.0)?;
        avg[n] = a;
        avg_o[n] = o;
    }
    Ok((avg, avg_o))
}

fn multisets(items: u64, n: u64) -> u64 {
    // C(items + n − 1, n)
    let mut c: u128 = 1;
    for j in 0..n as u128 {
        c = c * (items as u128 + j) / (j + 1);
        if c > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    c as u64
}

struct Walker<'a> {
    cfg: &'a GceConfig,
    observable: &'a BruteObservable,
    centers: &'a [Vec<f64>],
    items: &'a [(usize, f64, f64)],
    hereditary: bool,
    picks: Vec<usize>,
    config: ChargeConfiguration,
}

impl Walker<'_> {
    fn energy(&self) -> Result<f64, GceError> {
        if self.cfg.lambda == 0.0 {
            return Ok(0.0);
        }
        Ok(interaction_energy(&self.config, &self.cfg.kernel, &self.cfg.potential, &self.cfg.domain)?)
    }

    /// Sum over multisets of `remaining` more items drawn from `start..`.
    fn level(&mut self, remaining: usize, start: usize, weight: f64) -> Result<(f64, f64), GceError> {
        if remaining == 0 {
            let u = self.energy()?;
            let b = if u == 0.0 { 1.0 } else { (-self.cfg.lambda * u).exp() };
            let w = weight * multiplicity(&self.picks) * b;
            if w == 0.0 {
                return Ok((0.0, 0.0));
            }
            return Ok((w, w * self.observable.eval(&self.config)));
        }
        let mut total = (0.0, 0.0);
        for i in start..self.items.len() {
            let (cell, s, p) = self.items[i];
            self.config.push(&self.centers[cell], s)?;
            self.picks.push(i);
            let pruned = self.hereditary && remaining > 1 && self.energy()? == f64::INFINITY;
            if !pruned {
                let (a, o) = self.level(remaining - 1, i, weight * p)?;
                total.0 += a;
                total.1 += o;
            }
            self.picks.pop();
            let last = self.config.len() - 1;
            self.config.swap_remove(last);
        }
        Ok(total)
    }
}

/// n!/Π m_j! for a sorted pick list.
fn multiplicity(picks: &[usize]) -> f64 {
    let mut m = 1.0;
    let mut run = 0;
    for (j, p) in picks.iter().enumerate() {
        run = if j > 0 && picks[j - 1] == *p { run + 1 } else { 1 };
        m *= (j + 1) as f64 / run as f64;
    }
    m
}

/// Grid averages of the no-overlap indicator for n ≤ 3 unit hard spheres.
///
/// On a midpoint lattice the ordered-tuple sums depend on position
/// differences only, so inclusion–exclusion over the three pairs reduces
/// them to sums over short lattice vectors a, b weighted by the number of
/// base cells c for which c, c + a and c + b all lie in the box.
fn hard_sphere_averages(cfg: &GceConfig, excl: f64, k: usize, n_max: usize) -> Vec<f64> {
    let mut out = vec![1.0, 1.0, 0.0, 0.0];
    out.truncate(n_max + 1);
    if excl.is_infinite() {
        out.iter_mut().skip(1).for_each(|p| *p = 0.0);
        return out;
    }
    if n_max < 2 {
        return out;
    }
    let d = cfg.region.dim();
    let h: Vec<f64> = (0..d).map(|a| cfg.region.side(a) / k as f64).collect();
    let reach: Vec<i64> = h.iter().map(|&hk| ((excl / hk).ceil() as i64).min(k as i64)).collect();
    // lattice vectors strictly inside the exclusion ball
    let mut vecs: Vec<Vec<i64>> = Vec::new();
    let mut a: Vec<i64> = reach.iter().map(|r| -r).collect();
    'outer: loop {
        let r2: f64 = a.iter().zip(&h).map(|(&ai, &hk)| (ai as f64 * hk).powi(2)).sum();
        if r2 < excl * excl {
            vecs.push(a.clone());
        }
        for axis in 0..d {
            if a[axis] < reach[axis] {
                a[axis] += 1;
                continue 'outer;
            }
            a[axis] = -reach[axis];
        }
        break;
    }
    let k = k as i64;
    let m = (k as u128).pow(d as u32);
    let count1 = |a: &[i64]| -> u128 { a.iter().map(|&ai| (k - ai.abs()).max(0) as u128).product() };
    let x2: u128 = vecs.iter().map(|a| count1(a)).sum();
    out[2] = (m * m - x2) as f64 / (m * m) as f64;
    if n_max < 3 {
        return out;
    }
    let mut chain: u128 = 0;
    let mut tri: u128 = 0;
    for a in &vecs {
        for b in &vecs {
            let mut w: u128 = 1;
            let mut r2 = 0.0;
            for axis in 0..d {
                let span = a[axis].max(b[axis]).max(0) - a[axis].min(b[axis]).min(0);
                w *= (k - span).max(0) as u128;
                r2 += ((a[axis] - b[axis]) as f64 * h[axis]).powi(2);
            }
            chain += w;
            if r2 < excl * excl {
                tri += w;
            }
        }
    }
    let m3 = m * m * m;
    let s3 = m3 + 3 * chain - 3 * m * x2 - tri;
    out[3] = s3 as f64 / m3 as f64;
    out
}
