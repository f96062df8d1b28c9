use num_complex::Complex64;
use rayon::prelude::*;

use super::{chunk_stream, ScalingError, CHUNK};
use crate::field::{
    field_char_analytic, green_inner, pair_field, FieldCfOptions, FieldContext, FieldKernel, SmoothedTest,
    DEFAULT_PADDING,
};
use crate::noise::{
    noise_char_analytic_grid, pair_noise, sample_configuration, CfQuadrature, ChargeLaw, Cuboid, NoiseError,
    TestFunction,
};
use crate::stats::{ecf_estimate, EcfPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepTarget {
    /// ⟨η, f⟩ on the box
    Noise,
    /// ⟨φ, f⟩ with particles on the padded box
    Field,
}

/// z sweep of the rescaled pairing ⟨η or φ, f⟩/√z.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingSweepSpec {
    pub z_values: Vec<f64>,
    pub target: SweepTarget,
    pub f: TestFunction,
    pub t_grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl ScalingSweepSpec {
    pub fn new(
        z_values: Vec<f64>,
        target: SweepTarget,
        f: TestFunction,
        t_grid: Vec<f64>,
        samples: usize,
        seed: u64,
    ) -> Result<Self, ScalingError> {
        let s = Self {
            z_values,
            target,
            f,
            t_grid,
            samples,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScalingError> {
        if self.z_values.is_empty() || self.z_values.iter().any(|z| !(*z > 0.0 && z.is_finite())) {
            return Err(ScalingError::Domain("z values must be positive and finite".into()));
        }
        if self.z_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ScalingError::Domain("z values must be strictly increasing".into()));
        }
        if self.t_grid.iter().any(|t| !t.is_finite()) {
            return Err(ScalingError::Domain("t grid must be finite".into()));
        }
        Ok(())
    }
}

/// One t of one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    pub ecf: EcfPoint,
    pub limit: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub z: f64,
    /// D(z) = max_t |ECF_z(t) − CF_∞(t)|
    pub distance: f64,
    /// Standard error of D at the maximizing t.
    pub distance_stderr: f64,
    pub rows: Vec<SweepRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticPoint {
    pub z: f64,
    pub distance: f64,
    pub cf: Vec<Complex64>,
    pub limit: Vec<Complex64>,
}

fn check_centered(law: &ChargeLaw) -> Result<(), ScalingError> {
    if !law.is_centered() {
        return Err(ScalingError::Domain(format!(
            "the scaling limit needs a centered charge law, mean is {}",
            law.mean()
        )));
    }
    Ok(())
}

/// Gaussian limit exp(−σ² t² V/2), V = ∫_Λ f² (noise) or ∫(G * f)² (field).
pub fn limit_cf(
    target: SweepTarget,
    region: &Cuboid,
    law: &ChargeLaw,
    kernel: &FieldKernel,
    f: &TestFunction,
    t_grid: &[f64],
) -> Result<Vec<Complex64>, ScalingError> {
    let v = match target {
        SweepTarget::Noise => f.norm_sq(Some(region)),
        SweepTarget::Field => green_inner(kernel, f, f)?,
    };
    let s2 = law.second_moment();
    Ok(t_grid
        .iter()
        .map(|&t| Complex64::new((-0.5 * s2 * t * t * v).exp(), 0.0))
        .collect())
}

fn particle_region(target: SweepTarget, region: &Cuboid, kernel: &FieldKernel) -> Cuboid {
    match target {
        SweepTarget::Noise => region.clone(),
        SweepTarget::Field => region.padded(kernel.reach(DEFAULT_PADDING)),
    }
}

/// Monte Carlo ECF of the rescaled pairing at each z against the Gaussian limit.
pub fn ecf_convergence_sweep(
    spec: &ScalingSweepSpec,
    region: &Cuboid,
    law: &ChargeLaw,
    kernel: &FieldKernel,
) -> Result<Vec<SweepPoint>, ScalingError> {
    spec.validate()?;
    check_centered(law)?;
    let limit = limit_cf(spec.target, region, law, kernel, &spec.f, &spec.t_grid)?;
    let smoothed = match spec.target {
        SweepTarget::Field => Some(SmoothedTest::new(kernel, &spec.f)?),
        SweepTarget::Noise => None,
    };
    let particles = particle_region(spec.target, region, kernel);
    let mut out = Vec::with_capacity(spec.z_values.len());
    for (k, &z) in spec.z_values.iter().enumerate() {
        let scale = 1.0 / z.sqrt();
        let chunks = spec.samples.div_ceil(CHUNK);
        let draws: Vec<Result<Vec<f64>, NoiseError>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = chunk_stream(spec.seed, k, c);
                let len = CHUNK.min(spec.samples - c * CHUNK);
                (0..len)
                    .map(|_| {
                        let config = sample_configuration(&particles, z, law, &mut rng)?;
                        Ok(match &smoothed {
                            None => scale * pair_noise(&config, &spec.f),
                            Some(s) => scale * pair_field(&FieldContext::new(kernel, &config), s),
                        })
                    })
                    .collect()
            })
            .collect();
        let mut samples = Vec::with_capacity(spec.samples);
        for d in draws {
            samples.extend(d?);
        }
        let ecf = ecf_estimate(&samples, &spec.t_grid)?;
        let rows: Vec<SweepRow> = ecf
            .into_iter()
            .zip(&limit)
            .map(|(e, &l)| SweepRow {
                t: e.t,
                ecf: e,
                limit: l,
            })
            .collect();
        let (mut distance, mut distance_stderr) = (0.0, 0.0);
        for r in &rows {
            let dist = (r.ecf.estimate - r.limit).norm();
            if dist > distance {
                distance = dist;
                distance_stderr = r.ecf.stderr_of_distance(r.limit);
            }
        }
        out.push(SweepPoint {
            z,
            distance,
            distance_stderr,
            rows,
        });
    }
    Ok(out)
}

/// Quadrature-only counterpart: the exact rescaled CF against the limit.
pub fn analytic_convergence_sweep(
    spec: &ScalingSweepSpec,
    region: &Cuboid,
    law: &ChargeLaw,
    kernel: &FieldKernel,
    quad: &CfQuadrature,
) -> Result<Vec<AnalyticPoint>, ScalingError> {
    spec.validate()?;
    check_centered(law)?;
    let limit = limit_cf(spec.target, region, law, kernel, &spec.f, &spec.t_grid)?;
    let smoothed = match spec.target {
        SweepTarget::Field => Some(SmoothedTest::new(kernel, &spec.f)?),
        SweepTarget::Noise => None,
    };
    let particles = particle_region(spec.target, region, kernel);
    let mut out = Vec::new();
    for &z in &spec.z_values {
        let cf = match &smoothed {
            None => noise_char_analytic_grid(&particles, z, law, &spec.f, 1.0 / z.sqrt(), &spec.t_grid, quad)?,
            Some(s) => field_char_analytic(
                &particles,
                z,
                law,
                s,
                &spec.t_grid,
                true,
                &FieldCfOptions { quad: quad.clone() },
            )?,
        };
        let distance = cf.iter().zip(&limit).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        out.push(AnalyticPoint {
            z,
            distance,
            cf,
            limit: limit.clone(),
        });
    }
    Ok(out)
}
