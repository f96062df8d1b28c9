use std::f64::consts::PI;

use cpnlab::field::{field_char_analytic, green_inner, pair_field, FieldCfOptions, FieldContext, SmoothedTest, DEFAULT_PADDING};
use cpnlab::gce::{brute_force_gce, run_chains, BruteForceOptions, BruteObservable, MoveKind, Observable};
use cpnlab::kernel::{build_mollified_table, build_table, MollifierParams};
use cpnlab::noise::{campbell_moments, noise_char_analytic_grid, pair_noise, sample_configuration, CfQuadrature};
use cpnlab::scaling::{
    analytic_convergence_sweep, blockspin_identity_check, ecf_convergence_sweep, first_order_mc, triviality_curve,
    PerturbativeModel, PerturbativeOptions, PerturbativeSetup, ScalingSweepSpec, TrivialityOptions,
};
use cpnlab::stats::{ecf_estimate, RngStream};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{
    BlockspinParams, Experiment, ExperimentConfig, ExpansionParams, GceParams, KernelTableParams, SampleParams,
    SweepMethod, SweepParams, TrivialityParams,
};
use crate::record::Record;

/// Samples per random stream; fixed so results do not depend on the pool size.
const CHUNK: usize = 1000;

/// Records plus human-readable summary lines.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub summary: Vec<String>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome, String> {
    let seed = cfg.seed;
    match &cfg.experiment {
        Experiment::KernelTable(p) => kernel_table(p),
        Experiment::NoiseSample(p) => sample(p, seed, "noise-sample"),
        Experiment::FieldSample(p) => sample(p, seed, "field-sample"),
        Experiment::Gce(p) => gce(p),
        Experiment::EcfSweep(p) => sweep(p, seed),
        Experiment::Blockspin(p) => blockspin(p),
        Experiment::Triviality(p) => triviality(p, seed),
        Experiment::Expansion(p) => expansion(p, seed),
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn with_complex(r: Record, prefix: &str, c: Complex64) -> Record {
    r.real(&format!("{prefix}_re"), c.re).real(&format!("{prefix}_im"), c.im)
}

/// Closed forms exist in d = 2 and d = 4.
fn elementary_green(d: usize, m: f64, r: f64) -> Option<f64> {
    match d {
        2 => Some((-m * r).exp() / (2.0 * PI * r)),
        4 => Some((-m * r).exp() * (1.0 + m * r) / (4.0 * PI * PI * r.powi(3))),
        _ => None,
    }
}

fn kernel_table(p: &KernelTableParams) -> Result<Outcome, String> {
    let table = match p.epsilon {
        Some(e) => build_mollified_table(&p.params, &MollifierParams::new(e).map_err(err)?, p.r_min, p.r_max, p.points),
        None => build_table(&p.params, p.r_min, p.r_max, p.points),
    }
    .map_err(err)?;
    let (d, m) = (p.params.dim(), p.params.mass());
    let mut out = Outcome::default();
    for (r, g) in table.samples() {
        let mut rec = Record::new("kernel-table").int("d", d as u64).real("m", m);
        if let Some(e) = p.epsilon {
            rec = rec.real("epsilon", e);
        }
        rec = rec.real("r", r).real("estimate", g).real("stderr", 0.0).int("samples", 0);
        if p.epsilon.is_none() {
            if let Some(exact) = elementary_green(d, m, r) {
                rec = rec.real("reference", exact);
            }
        }
        out.records.push(rec);
    }
    out.summary.push(format!("kernel table: {} radii in [{}, {}]", table.len(), p.r_min, p.r_max));
    Ok(out)
}

/// n values of `draw`, chunk c drawing from stream (seed, c).
fn sample_parallel(
    n: usize,
    seed: u64,
    draw: impl Fn(&mut RngStream) -> Result<f64, String> + Sync,
) -> Result<Vec<f64>, String> {
    let chunks: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = RngStream::new(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(chunks.concat())
}

fn mean_var(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let c4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let var_se = ((c4 - c2 * c2).max(0.0) / n).sqrt();
    (mean, c2, var_se)
}

fn sample(p: &SampleParams, seed: u64, name: &str) -> Result<Outcome, String> {
    let quad = CfQuadrature::default();
    let (values, mean_ref, var_ref, cf_ref) = match &p.kernel {
        None => {
            let values = sample_parallel(p.samples, seed, |rng| {
                let c = sample_configuration(&p.region, p.z, &p.law, rng).map_err(err)?;
                Ok(pair_noise(&c, &p.f))
            })?;
            let (m, v) = campbell_moments(&p.region, p.z, &p.law, &p.f);
            let cf = noise_char_analytic_grid(&p.region, p.z, &p.law, &p.f, 1.0, &p.t_grid, &quad).map_err(err)?;
            (values, m, v, cf)
        }
        Some(kernel) => {
            let particles = p.region.padded(kernel.reach(DEFAULT_PADDING));
            let smoothed = SmoothedTest::new(kernel, &p.f).map_err(err)?;
            let values = sample_parallel(p.samples, seed, |rng| {
                let c = sample_configuration(&particles, p.z, &p.law, rng).map_err(err)?;
                Ok(pair_field(&FieldContext::new(kernel, &c), &smoothed))
            })?;
            // full-space moments; the padding leaves a relative error of e^{-n_pad}
            let m = kernel.params().expect("green kernel").mass();
            let mean = p.z * p.law.mean() * p.f.integral(None) / m;
            let var = p.z * p.law.second_moment() * green_inner(kernel, &p.f, &p.f).map_err(err)?;
            let cf = field_char_analytic(&particles, p.z, &p.law, &smoothed, &p.t_grid, false, &FieldCfOptions::default())
                .map_err(err)?;
            (values, mean, var, cf)
        }
    };
    let n = values.len() as u64;
    let (mean, var, var_se) = mean_var(&values);
    let base = || Record::new(name).real("z", p.z).text("law", &p.law);
    let mut out = Outcome::default();
    out.records.push(
        base()
            .text("quantity", "mean")
            .real("estimate", mean)
            .real("stderr", (var / n as f64).sqrt())
            .int("samples", n)
            .real("reference", mean_ref),
    );
    out.records.push(
        base()
            .text("quantity", "variance")
            .real("estimate", var)
            .real("stderr", var_se)
            .int("samples", n)
            .real("reference", var_ref),
    );
    let ecf = ecf_estimate(&values, &p.t_grid).map_err(err)?;
    let mut worst = 0.0f64;
    for (e, c) in ecf.iter().zip(&cf_ref) {
        let r = base().text("quantity", "cf").real("t", e.t);
        let r = with_complex(r, "estimate", e.estimate)
            .real("stderr_re", e.stderr_re)
            .real("stderr_im", e.stderr_im)
            .int("samples", n);
        out.records.push(with_complex(r, "reference", *c));
        worst = worst.max((e.estimate - c).norm());
    }
    out.summary.push(format!(
        "{name}: mean {mean:.6} (reference {mean_ref:.6}), variance {var:.6} (reference {var_ref:.6}), max |ECF - CF| {worst:.3e}"
    ));
    Ok(out)
}

fn gce(p: &GceParams) -> Result<Outcome, String> {
    let cfg = &p.config;
    let mut obs = vec![Observable::Count, Observable::TotalCharge];
    if cfg.lambda > 0.0 {
        obs.push(Observable::Energy);
    }
    let res = run_chains(cfg, &obs, p.chains).map_err(err)?;
    let oracle = match p.oracle_n_max {
        Some(n) => {
            let d = BruteForceOptions::default();
            let opts = BruteForceOptions {
                cells_per_axis: p.oracle_cells,
                tolerance: p.oracle_tolerance.unwrap_or(d.tolerance),
                ..d
            };
            Some(brute_force_gce(cfg, n, &BruteObservable::Count, &opts).map_err(err)?)
        }
        None => None,
    };
    let base = || {
        Record::new("gce")
            .real("z", cfg.z)
            .real("lambda", cfg.lambda)
            .text("law", &cfg.law)
            .text("potential", &cfg.potential)
            .int("chains", p.chains as u64)
    };
    let mut out = Outcome::default();
    for (name, s) in res.names.iter().zip(&res.summaries) {
        let mut r = base()
            .text("quantity", name)
            .real("estimate", s.mean)
            .real("stderr", s.stderr)
            .int("samples", s.count);
        if name == "N" {
            if cfg.lambda == 0.0 {
                r = r.real("reference", cfg.mean_occupancy());
            } else if let Some(o) = &oracle {
                r = r.real("reference", o.expectation).real("truncation_bound", o.truncation_bound);
            }
        }
        out.records.push(r);
    }
    for k in MoveKind::ALL {
        let i = k as usize;
        let rate = if res.proposed[i] == 0 {
            0.0
        } else {
            res.accepted[i] as f64 / res.proposed[i] as f64
        };
        out.records.push(
            base()
                .text("quantity", format!("acceptance-{}", k.name()))
                .real("estimate", rate)
                .int("samples", res.proposed[i]),
        );
    }
    let n = res.summary("N").expect("count is always recorded");
    out.summary.push(format!(
        "gce: E[N] = {:.6} +/- {:.6} over {} retained steps, z|L| = {:.6}, max energy drift {:.3e}",
        n.mean,
        n.stderr,
        res.retained(),
        cfg.mean_occupancy(),
        res.max_drift
    ));
    Ok(out)
}

fn sweep(p: &SweepParams, seed: u64) -> Result<Outcome, String> {
    let spec = ScalingSweepSpec::new(p.z_values.clone(), p.target, p.f.clone(), p.t_grid.clone(), p.samples, seed)
        .map_err(err)?;
    let target = match p.target {
        cpnlab::scaling::SweepTarget::Noise => "noise",
        cpnlab::scaling::SweepTarget::Field => "field",
    };
    let base = |z: f64, t: f64| Record::new("ecf-sweep").text("target", target).real("z", z).real("t", t);
    let mut out = Outcome::default();
    match p.method {
        SweepMethod::MonteCarlo => {
            for point in ecf_convergence_sweep(&spec, &p.region, &p.law, &p.kernel).map_err(err)? {
                for row in &point.rows {
                    let r = with_complex(base(point.z, row.t), "estimate", row.ecf.estimate)
                        .real("stderr_re", row.ecf.stderr_re)
                        .real("stderr_im", row.ecf.stderr_im)
                        .int("samples", p.samples as u64);
                    out.records.push(with_complex(r, "reference", row.limit));
                }
                out.summary.push(format!(
                    "z = {}: sup_t |ECF - limit| = {:.4e} +/- {:.1e}",
                    point.z, point.distance, point.distance_stderr
                ));
            }
        }
        SweepMethod::Quadrature => {
            let points = analytic_convergence_sweep(&spec, &p.region, &p.law, &p.kernel, &CfQuadrature::default())
                .map_err(err)?;
            for point in points {
                for ((t, cf), lim) in p.t_grid.iter().zip(&point.cf).zip(&point.limit) {
                    let r = with_complex(base(point.z, *t), "estimate", *cf)
                        .real("stderr_re", 0.0)
                        .real("stderr_im", 0.0)
                        .int("samples", 0);
                    out.records.push(with_complex(r, "reference", *lim));
                }
                out.summary.push(format!("z = {}: sup_t |CF - limit| = {:.4e}", point.z, point.distance));
            }
        }
    }
    Ok(out)
}

fn blockspin(p: &BlockspinParams) -> Result<Outcome, String> {
    let mut out = Outcome::default();
    for &z in &p.z_values {
        let rep = blockspin_identity_check(z, &p.params, &p.law, &p.f, &p.t_grid, &FieldCfOptions::default())
            .map_err(err)?;
        for ((t, a), b) in p.t_grid.iter().zip(&rep.rescaled).zip(&rep.blocked) {
            let r = Record::new("blockspin").real("z", z).real("alpha", rep.alpha).real("t", *t);
            let r = with_complex(r, "estimate", *a).real("stderr", 0.0).int("samples", 0);
            out.records.push(with_complex(r, "reference", *b));
        }
        out.summary.push(format!("z = {z}: max exponent discrepancy {:.3e}", rep.max_discrepancy));
    }
    Ok(out)
}

fn triviality(p: &TrivialityParams, seed: u64) -> Result<Outcome, String> {
    let opts = TrivialityOptions {
        samples: p.samples.max(2),
        seed,
        cells_per_axis: p.cells_per_axis,
        mc_z_max: if p.samples == 0 { -1.0 } else { p.mc_z_max },
        ..TrivialityOptions::default()
    };
    let recs = triviality_curve(&p.z_values, p.alpha, &p.law, &p.params, &p.region, &opts).map_err(err)?;
    let mut out = Outcome::default();
    for rec in recs {
        let base = Record::new("triviality").real("z", rec.z).real("alpha", p.alpha);
        let r = match &rec.mc {
            Some(mc) => base
                .real("estimate", mc.center_mean)
                .real("stderr", mc.center_stderr)
                .int("samples", p.samples as u64)
                .real("reference", rec.normalizer)
                .real("box_mean", mc.box_mean)
                .real("box_stderr", mc.box_stderr)
                .real("boundary_deviation", mc.boundary_deviation),
            None => base
                .real("estimate", rec.normalizer)
                .real("stderr", 0.0)
                .int("samples", 0),
        };
        out.records.push(r);
        out.summary.push(format!("z = {}: N(z) = {:.6e}", rec.z, rec.normalizer));
    }
    Ok(out)
}

fn expansion(p: &ExpansionParams, seed: u64) -> Result<Outcome, String> {
    let setup = PerturbativeSetup::new(p.params.clone(), p.epsilon, p.region.clone(), p.f.clone(), &p.potential, p.n_pad)
        .map_err(err)?;
    let opts = PerturbativeOptions::default();
    let poisson = PerturbativeModel::Poisson {
        z: p.z,
        law: p.law.clone(),
    };
    let gauss = PerturbativeModel::gaussian_limit(&p.law);
    let quantity = format!("A{}", p.order);
    let mut out = Outcome::default();
    for &t in &p.t_grid {
        let a = setup.coefficient(p.order, t, &poisson, &opts).map_err(err)?;
        let g = setup.coefficient(p.order, t, &gauss, &opts).map_err(err)?;
        let base = || {
            Record::new("expansion")
                .real("z", p.z)
                .real("epsilon", p.epsilon)
                .text("potential", &p.potential)
                .real("t", t)
        };
        let r = with_complex(base().text("quantity", &quantity), "estimate", a)
            .real("stderr", 0.0)
            .int("samples", 0);
        out.records.push(with_complex(r, "reference", g));
        if p.mc_samples > 0 {
            let (mc, se_re, se_im) =
                first_order_mc(&setup, p.z, &p.law, t, p.mc_samples, seed, p.y_panels).map_err(err)?;
            let r = with_complex(base().text("quantity", "A1-mc"), "estimate", mc)
                .real("stderr_re", se_re)
                .real("stderr_im", se_im)
                .int("samples", p.mc_samples as u64);
            out.records.push(with_complex(r, "reference", a));
        }
        out.summary.push(format!("t = {t}: {quantity} = {a:.6e}, Gaussian {g:.6e}, gap {:.3e}", (a - g).norm()));
    }
    Ok(out)
}
