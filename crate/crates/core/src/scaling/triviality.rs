use rayon::prelude::*;

use super::{chunk_stream, ScalingError, CHUNK};
use crate::field::{FieldContext, FieldKernel, DEFAULT_PADDING};
use crate::kernel::KernelParams;
use crate::noise::{sample_configuration, ChargeLaw, Cuboid};
use crate::potential::{renorm_normalizer, RadialQuadrature};
use crate::quadrature::pairwise_sum;

#[derive(Clone, Debug, PartialEq)]
pub struct TrivialityOptions {
    pub samples: usize,
    pub seed: u64,
    /// Midpoint cells per axis for the box integral.
    pub cells_per_axis: usize,
    /// Padding of the particle box, in decay lengths.
    pub n_pad: f64,
    /// Monte Carlo columns are skipped above this activity.
    pub mc_z_max: f64,
    pub radial: RadialQuadrature,
}

impl Default for TrivialityOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            cells_per_axis: 8,
            n_pad: DEFAULT_PADDING,
            mc_z_max: f64::INFINITY,
            radial: RadialQuadrature::default(),
        }
    }
}

/// Monte Carlo columns of one z.
#[derive(Clone, Debug, PartialEq)]
pub struct TrivialityMc {
    /// cos(αφ) at the box centre.
    pub center_mean: f64,
    pub center_stderr: f64,
    /// ∫_Λ (cos(αφ) − 1) dx
    pub box_mean: f64,
    pub box_stderr: f64,
    pub box_variance: f64,
    pub box_variance_stderr: f64,
    /// centre-point mean minus the box average of E[cos(αφ)]
    pub boundary_deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrivialityRecord {
    pub z: f64,
    /// N(z) = E[cos(αφ^z(x))] for an interior point of the full-space field.
    pub normalizer: f64,
    pub mc: Option<TrivialityMc>,
}

/// N(z) and Monte Carlo statistics of cos(αφ^z) for each z.
pub fn triviality_curve(
    z_values: &[f64],
    alpha: f64,
    law: &ChargeLaw,
    params: &KernelParams,
    region: &Cuboid,
    opts: &TrivialityOptions,
) -> Result<Vec<TrivialityRecord>, ScalingError> {
    if !law.is_symmetric() {
        return Err(ScalingError::Domain("triviality needs a symmetric charge law".into()));
    }
    let kernel = FieldKernel::green(params.clone())?;
    let particles = region.padded(opts.n_pad / params.mass());
    let center = region.center();
    let k = opts.cells_per_axis.max(1);
    let d = region.dim();
    let cells = k.pow(d as u32);
    let points: Vec<Vec<f64>> = (0..cells)
        .map(|mut c| {
            (0..d)
                .map(|a| {
                    let i = c % k;
                    c /= k;
                    region.lower()[a] + region.side(a) * (i as f64 + 0.5) / k as f64
                })
                .collect()
        })
        .collect();
    let vol = region.volume();
    let mut out = Vec::new();
    for (zi, &z) in z_values.iter().enumerate() {
        let normalizer = renorm_normalizer(z, alpha, law, params, &opts.radial)?;
        let mc = if z <= opts.mc_z_max && opts.samples >= 2 {
            let chunks = opts.samples.div_ceil(CHUNK);
            let parts: Vec<Result<Vec<(f64, f64)>, ScalingError>> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = chunk_stream(opts.seed, zi, c);
                    let len = CHUNK.min(opts.samples - c * CHUNK);
                    let mut v = Vec::with_capacity(len);
                    for _ in 0..len {
                        let config = sample_configuration(&particles, z, law, &mut rng)?;
                        let ctx = FieldContext::rescaled(&kernel, &config, z)?;
                        let at_center = (alpha * ctx.eval_unchecked(&center)).cos();
                        let grid: Vec<f64> = points
                            .iter()
                            .map(|x| (alpha * ctx.eval_unchecked(x)).cos() - 1.0)
                            .collect();
                        v.push((at_center, vol * pairwise_sum(&grid) / cells as f64));
                    }
                    Ok(v)
                })
                .collect();
            let mut c_vals = Vec::with_capacity(opts.samples);
            let mut b_vals = Vec::with_capacity(opts.samples);
            for p in parts {
                for (a, b) in p? {
                    c_vals.push(a);
                    b_vals.push(b);
                }
            }
            let (cm, cv) = moments(&c_vals);
            let (bm, bv) = moments(&b_vals);
            let n = b_vals.len() as f64;
            let m4 = b_vals.iter().map(|x| (x - bm).powi(4)).sum::<f64>() / n;
            Some(TrivialityMc {
                center_mean: cm,
                center_stderr: (cv / n).sqrt(),
                box_mean: bm,
                box_stderr: (bv / n).sqrt(),
                box_variance: bv,
                box_variance_stderr: ((m4 - bv * bv).max(0.0) / n).sqrt(),
                boundary_deviation: cm - (1.0 + bm / vol),
            })
        } else {
            None
        };
        out.push(TrivialityRecord { z, normalizer, mc });
    }
    Ok(out)
}

/// Mean and unbiased variance.
fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}
