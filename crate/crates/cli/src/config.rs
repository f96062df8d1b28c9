//! Experiment configuration: a TOML file with section headers.
//!
//! Every key is addressed as `section.key`. Validation never stops at the
//! first problem; it returns every (field, message) pair it finds, including
//! keys the chosen experiment does not read.

use std::collections::BTreeSet;
use std::fmt;

use cpnlab::field::FieldKernel;
use cpnlab::gce::{GceConfig, MoveMix};
use cpnlab::kernel::{KernelParams, MollifierParams};
use cpnlab::noise::{ChargeLaw, Cuboid, TestFunction};
use cpnlab::potential::{IndicatorKernel, PotentialSpec};
use cpnlab::scaling::SweepTarget;
use cpnlab::stats::symmetric_grid;
use toml::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    KernelTable,
    NoiseSample,
    FieldSample,
    Gce,
    EcfSweep,
    Blockspin,
    Triviality,
    Expansion,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        Self::KernelTable,
        Self::NoiseSample,
        Self::FieldSample,
        Self::Gce,
        Self::EcfSweep,
        Self::Blockspin,
        Self::Triviality,
        Self::Expansion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::KernelTable => "kernel-table",
            Self::NoiseSample => "noise-sample",
            Self::FieldSample => "field-sample",
            Self::Gce => "gce",
            Self::EcfSweep => "ecf-sweep",
            Self::Blockspin => "blockspin",
            Self::Triviality => "triviality",
            Self::Expansion => "expansion",
        }
    }
}

#[derive(Clone, Debug)]
pub struct KernelTableParams {
    pub params: KernelParams,
    pub epsilon: Option<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

#[derive(Clone, Debug)]
pub struct SampleParams {
    pub region: Cuboid,
    pub z: f64,
    pub law: ChargeLaw,
    /// None for the noise, the smoothing kernel for the field.
    pub kernel: Option<FieldKernel>,
    pub f: TestFunction,
    pub t_grid: Vec<f64>,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct GceParams {
    pub config: GceConfig,
    pub chains: usize,
    pub oracle_n_max: Option<usize>,
    pub oracle_cells: usize,
    pub oracle_tolerance: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMethod {
    MonteCarlo,
    Quadrature,
}

#[derive(Clone, Debug)]
pub struct SweepParams {
    pub region: Cuboid,
    pub law: ChargeLaw,
    pub kernel: FieldKernel,
    pub z_values: Vec<f64>,
    pub target: SweepTarget,
    pub method: SweepMethod,
    pub f: TestFunction,
    pub t_grid: Vec<f64>,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct BlockspinParams {
    pub params: KernelParams,
    pub law: ChargeLaw,
    pub z_values: Vec<f64>,
    pub f: TestFunction,
    pub t_grid: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TrivialityParams {
    pub params: KernelParams,
    pub region: Cuboid,
    pub law: ChargeLaw,
    pub alpha: f64,
    pub z_values: Vec<f64>,
    pub samples: usize,
    pub mc_z_max: f64,
    pub cells_per_axis: usize,
}

#[derive(Clone, Debug)]
pub struct ExpansionParams {
    pub params: KernelParams,
    pub region: Cuboid,
    pub z: f64,
    pub law: ChargeLaw,
    pub epsilon: f64,
    pub potential: PotentialSpec,
    pub f: TestFunction,
    pub t_grid: Vec<f64>,
    pub order: usize,
    pub n_pad: f64,
    pub mc_samples: usize,
    pub y_panels: usize,
}

#[derive(Clone, Debug)]
pub enum Experiment {
    KernelTable(KernelTableParams),
    NoiseSample(SampleParams),
    FieldSample(SampleParams),
    Gce(GceParams),
    EcfSweep(SweepParams),
    Blockspin(BlockspinParams),
    Triviality(TrivialityParams),
    Expansion(ExpansionParams),
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub experiment: Experiment,
}

#[derive(Clone, Copy)]
enum Bound {
    Any,
    Positive,
    NonNegative,
}

impl Bound {
    fn check(self, x: f64) -> Option<&'static str> {
        match self {
            _ if !x.is_finite() => Some("must be finite"),
            Self::Positive if x <= 0.0 => Some("must be positive"),
            Self::NonNegative if x < 0.0 => Some("must be non-negative"),
            _ => None,
        }
    }
}

struct Reader<'a> {
    root: &'a toml::Table,
    used: BTreeSet<String>,
    errors: Vec<ConfigError>,
}

impl<'a> Reader<'a> {
    fn error(&mut self, field: &str, message: impl Into<String>) {
        self.errors.push(ConfigError {
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn raw(&mut self, field: &str) -> Option<&'a Value> {
        let (sec, key) = field.split_once('.').expect("section.key");
        self.used.insert(field.to_string());
        self.root.get(sec)?.as_table()?.get(key)
    }

    fn required<T>(&mut self, field: &str, v: Option<T>) -> Option<T> {
        if v.is_none() && !self.errors.iter().any(|e| e.field == field) {
            self.error(field, "is required");
        }
        v
    }

    fn real_opt(&mut self, field: &str, bound: Bound) -> Option<f64> {
        let v = self.raw(field)?;
        let x = match v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            _ => {
                self.error(field, "must be a number");
                return None;
            }
        };
        if let Some(msg) = bound.check(x) {
            self.error(field, format!("{msg}, got {x}"));
            return None;
        }
        Some(x)
    }

    fn real(&mut self, field: &str, bound: Bound) -> Option<f64> {
        let v = self.real_opt(field, bound);
        self.required(field, v)
    }

    fn int_opt(&mut self, field: &str, min: u64) -> Option<u64> {
        let v = self.raw(field)?;
        match v {
            Value::Integer(i) if *i >= min as i64 => Some(*i as u64),
            Value::Integer(i) => {
                self.error(field, format!("must be at least {min}, got {i}"));
                None
            }
            _ => {
                self.error(field, "must be an integer");
                None
            }
        }
    }

    fn int(&mut self, field: &str, min: u64) -> Option<u64> {
        let v = self.int_opt(field, min);
        self.required(field, v)
    }

    fn text_opt(&mut self, field: &str) -> Option<&'a str> {
        let v = self.raw(field)?;
        match v.as_str() {
            Some(s) => Some(s),
            None => {
                self.error(field, "must be a string");
                None
            }
        }
    }

    fn text(&mut self, field: &str) -> Option<&'a str> {
        let v = self.text_opt(field);
        self.required(field, v)
    }

    fn reals_opt(&mut self, field: &str, bound: Bound) -> Option<Vec<f64>> {
        let v = self.raw(field)?;
        let Some(arr) = v.as_array() else {
            self.error(field, "must be an array of numbers");
            return None;
        };
        let mut out = Vec::with_capacity(arr.len());
        for x in arr {
            let x = match x {
                Value::Float(x) => *x,
                Value::Integer(i) => *i as f64,
                _ => {
                    self.error(field, "must be an array of numbers");
                    return None;
                }
            };
            if let Some(msg) = bound.check(x) {
                self.error(field, format!("every entry {msg}, got {x}"));
                return None;
            }
            out.push(x);
        }
        Some(out)
    }

    fn reals(&mut self, field: &str, bound: Bound) -> Option<Vec<f64>> {
        let v = self.reals_opt(field, bound);
        self.required(field, v)
    }

    fn parsed<T: std::str::FromStr>(&mut self, field: &str) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        let s = self.text(field)?;
        match s.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.error(field, e.to_string());
                None
            }
        }
    }

    fn unknown_keys(&mut self) {
        for (sec, v) in self.root {
            let Some(t) = v.as_table() else {
                self.error(sec, "top-level keys must live in a [section]");
                continue;
            };
            for key in t.keys() {
                let field = format!("{sec}.{key}");
                if !self.used.contains(&field) {
                    self.error(&field, "unknown key for this experiment kind");
                }
            }
        }
    }

    fn region(&mut self) -> Option<Cuboid> {
        self.parsed("model.box")
    }

    fn law(&mut self) -> Option<ChargeLaw> {
        self.parsed("model.law")
    }

    fn kernel_params(&mut self, d: Option<usize>) -> Option<KernelParams> {
        let m = self.real("model.m", Bound::Positive);
        let (d, m) = (d?, m?);
        match KernelParams::new(d, m) {
            Ok(p) => Some(p),
            Err(e) => {
                self.error("model.d", e.to_string());
                None
            }
        }
    }

    fn dim(&mut self) -> Option<usize> {
        let d = self.int("model.d", 1)?;
        if !(2..=4).contains(&d) {
            self.error("model.d", format!("must lie in 2..=4, got {d}"));
            return None;
        }
        Some(d as usize)
    }

    fn test_function(&mut self, d: Option<usize>) -> Option<TestFunction> {
        let center = self.reals("test_function.center", Bound::Any);
        let width = self.real("test_function.width", Bound::Positive);
        let amp = self.real_opt("test_function.amplitude", Bound::Any).unwrap_or(1.0);
        let (center, width) = (center?, width?);
        if let Some(d) = d {
            if center.len() != d {
                self.error(
                    "test_function.center",
                    format!("needs {d} coordinates, got {}", center.len()),
                );
                return None;
            }
        }
        match TestFunction::bump(center, width, amp) {
            Ok(f) => Some(f),
            Err(e) => {
                self.error("test_function", e.to_string());
                None
            }
        }
    }

    fn t_grid(&mut self) -> Option<Vec<f64>> {
        let explicit = self.reals_opt("frequencies.t", Bound::Any);
        let t_max = self.real_opt("frequencies.t_max", Bound::Positive);
        let points = self.int_opt("frequencies.t_points", 2);
        match (explicit, t_max, points) {
            (Some(t), None, None) if !t.is_empty() => Some(t),
            (Some(_), None, None) => {
                self.error("frequencies.t", "must not be empty");
                None
            }
            (None, Some(t), Some(n)) => Some(symmetric_grid(t, n as usize)),
            (Some(_), _, _) => {
                self.error("frequencies.t", "give either t or t_max with t_points, not both");
                None
            }
            _ => {
                if !self.errors.iter().any(|e| e.field.starts_with("frequencies.")) {
                    self.error("frequencies.t_max", "t_max and t_points (or an explicit t list) are required");
                }
                None
            }
        }
    }

    fn z_values(&mut self) -> Option<Vec<f64>> {
        let z = self.reals("model.z_values", Bound::Positive)?;
        if z.is_empty() {
            self.error("model.z_values", "must not be empty");
            return None;
        }
        if z.windows(2).any(|w| w[1] <= w[0]) {
            self.error("model.z_values", "must be strictly increasing");
            return None;
        }
        Some(z)
    }

    /// green | mollified (needs model.epsilon) | indicator (needs model.radius)
    fn field_kernel(&mut self, d: Option<usize>, allow_indicator: bool) -> Option<FieldKernel> {
        let kind = self.text_opt("model.kernel").unwrap_or("green");
        match kind {
            "green" => {
                let p = self.kernel_params(d)?;
                self.lift("model.kernel", FieldKernel::green(p))
            }
            "mollified" => {
                let eps = self.real("model.epsilon", Bound::Positive);
                let p = self.kernel_params(d)?;
                let moll = self.lift("model.epsilon", MollifierParams::new(eps?))?;
                self.lift("model.kernel", FieldKernel::mollified(p, moll))
            }
            "indicator" if allow_indicator => {
                let r = self.real("model.radius", Bound::Positive)?;
                let k = self.lift("model.radius", IndicatorKernel::new(r))?;
                Some(FieldKernel::indicator(k))
            }
            other => {
                let allowed = if allow_indicator {
                    "green, mollified or indicator"
                } else {
                    "green or mollified"
                };
                self.error("model.kernel", format!("must be {allowed}, got `{other}`"));
                None
            }
        }
    }

    fn lift<T, E: fmt::Display>(&mut self, field: &str, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.error(field, e.to_string());
                None
            }
        }
    }

    fn samples(&mut self, min: u64) -> Option<usize> {
        self.int("sampling.samples", min).map(|n| n as usize)
    }
}

fn box_dim(region: &Option<Cuboid>) -> Option<usize> {
    region.as_ref().map(Cuboid::dim)
}

/// Parses and validates; on failure returns every problem found.
pub fn validate_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let root: toml::Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            return Err(vec![ConfigError {
                field: "<file>".into(),
                message: e.to_string(),
            }])
        }
    };
    let mut r = Reader {
        root: &root,
        used: BTreeSet::new(),
        errors: Vec::new(),
    };
    let seed = r.int("experiment.seed", 0);
    let kind = r.text("experiment.kind").and_then(|k| {
        let found = ExperimentKind::ALL.into_iter().find(|x| x.name() == k);
        if found.is_none() {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            r.error("experiment.kind", format!("must be one of {}, got `{k}`", names.join(", ")));
        }
        found
    });
    let experiment = kind.and_then(|k| read_experiment(&mut r, k));
    if kind.is_some() {
        r.unknown_keys();
    }
    if !r.errors.is_empty() {
        return Err(r.errors);
    }
    Ok(ExperimentConfig {
        kind: kind.unwrap(),
        seed: seed.unwrap(),
        experiment: experiment.expect("no errors implies a complete experiment"),
    })
}

fn read_experiment(r: &mut Reader<'_>, kind: ExperimentKind) -> Option<Experiment> {
    match kind {
        ExperimentKind::KernelTable => read_kernel_table(r),
        ExperimentKind::NoiseSample => read_sample(r, false),
        ExperimentKind::FieldSample => read_sample(r, true),
        ExperimentKind::Gce => read_gce(r),
        ExperimentKind::EcfSweep => read_sweep(r),
        ExperimentKind::Blockspin => read_blockspin(r),
        ExperimentKind::Triviality => read_triviality(r),
        ExperimentKind::Expansion => read_expansion(r),
    }
}

fn read_kernel_table(r: &mut Reader<'_>) -> Option<Experiment> {
    let d = r.dim();
    let params = r.kernel_params(d);
    let epsilon = r.real_opt("model.epsilon", Bound::Positive);
    let r_min = r.real("table.r_min", Bound::Positive);
    let r_max = r.real("table.r_max", Bound::Positive);
    let points = r.int("table.points", 2);
    if let (Some(a), Some(b)) = (r_min, r_max) {
        if b <= a {
            r.error("table.r_max", format!("must exceed table.r_min, got {b} <= {a}"));
            return None;
        }
    }
    Some(Experiment::KernelTable(KernelTableParams {
        params: params?,
        epsilon,
        r_min: r_min?,
        r_max: r_max?,
        points: points? as usize,
    }))
}

fn read_sample(r: &mut Reader<'_>, field: bool) -> Option<Experiment> {
    let region = r.region();
    let d = box_dim(&region);
    let z = r.real("model.z", Bound::Positive);
    let law = r.law();
    let kernel = if field { r.field_kernel(d, false) } else { None };
    let f = r.test_function(d);
    let t_grid = r.t_grid();
    let samples = r.samples(2);
    if field && kernel.is_none() {
        return None;
    }
    let p = SampleParams {
        region: region?,
        z: z?,
        law: law?,
        kernel,
        f: f?,
        t_grid: t_grid?,
        samples: samples?,
    };
    Some(if field {
        Experiment::FieldSample(p)
    } else {
        Experiment::NoiseSample(p)
    })
}

fn read_gce(r: &mut Reader<'_>) -> Option<Experiment> {
    let region = r.region();
    let d = box_dim(&region);
    let z = r.real("model.z", Bound::Positive);
    let lambda = r.real("model.lambda", Bound::NonNegative);
    let law = r.law();
    let kernel = r.field_kernel(d, true);
    let potential: Option<PotentialSpec> = r.parsed("model.potential");
    let steps = r.int("sampling.steps", 1);
    let burn_in = r.int_opt("sampling.burn_in", 0);
    let thinning = r.int_opt("sampling.thinning", 1);
    let batch_size = r.int_opt("sampling.batch_size", 1);
    let chains = r.int_opt("sampling.chains", 1).unwrap_or(1) as usize;
    let sigma = r.real_opt("sampling.sigma_disp", Bound::Positive);
    let drift = r.int_opt("sampling.drift_interval", 1);
    let mix = [
        r.real_opt("moves.insert", Bound::NonNegative),
        r.real_opt("moves.delete", Bound::NonNegative),
        r.real_opt("moves.displace", Bound::NonNegative),
        r.real_opt("moves.recharge", Bound::NonNegative),
    ];
    let oracle_n_max = r.int_opt("oracle.n_max", 0).map(|n| n as usize);
    let oracle_cells = r.int_opt("oracle.cells_per_axis", 1).unwrap_or(16) as usize;
    let oracle_tolerance = r.real_opt("oracle.tolerance", Bound::Positive);
    let seed = r.int_opt("experiment.seed", 0);
    let (region, z, lambda, law, kernel, potential, steps) =
        (region?, z?, lambda?, law?, kernel?, potential?, steps?);
    let mut cfg = r.lift("model", GceConfig::new(region, z, lambda, law, kernel, potential))?;
    cfg.steps = steps;
    cfg.burn_in = burn_in.unwrap_or(steps / 10);
    if let Some(t) = thinning {
        cfg.thinning = t;
    }
    if let Some(b) = batch_size {
        cfg.batch_size = b;
    }
    if let Some(s) = sigma {
        cfg.sigma_disp = s;
    }
    if let Some(i) = drift {
        cfg.drift_interval = i;
    }
    if mix.iter().any(Option::is_some) {
        let d = MoveMix::default();
        cfg.mix = MoveMix {
            insert: mix[0].unwrap_or(d.insert),
            delete: mix[1].unwrap_or(d.delete),
            displace: mix[2].unwrap_or(d.displace),
            recharge: mix[3].unwrap_or(d.recharge),
        };
    }
    cfg.seed = seed?;
    if cfg.burn_in >= cfg.steps {
        r.error("sampling.burn_in", format!("must be below sampling.steps ({})", cfg.steps));
        return None;
    }
    let field = if mix.iter().any(Option::is_some) { "moves" } else { "sampling" };
    r.lift(field, cfg.validate())?;
    Some(Experiment::Gce(GceParams {
        config: cfg,
        chains,
        oracle_n_max,
        oracle_cells,
        oracle_tolerance,
    }))
}

fn read_sweep(r: &mut Reader<'_>) -> Option<Experiment> {
    let region = r.region();
    let d = box_dim(&region);
    let law = r.law();
    let z_values = r.z_values();
    let target = match r.text_opt("sweep.target").unwrap_or("noise") {
        "noise" => Some(SweepTarget::Noise),
        "field" => Some(SweepTarget::Field),
        other => {
            r.error("sweep.target", format!("must be noise or field, got `{other}`"));
            None
        }
    };
    let method = match r.text_opt("sweep.method").unwrap_or("monte-carlo") {
        "monte-carlo" => Some(SweepMethod::MonteCarlo),
        "quadrature" => Some(SweepMethod::Quadrature),
        other => {
            r.error("sweep.method", format!("must be monte-carlo or quadrature, got `{other}`"));
            None
        }
    };
    let kernel = r.field_kernel(d, false);
    let f = r.test_function(d);
    let t_grid = r.t_grid();
    let samples = match method {
        Some(SweepMethod::Quadrature) => r.int_opt("sampling.samples", 2).map(|n| n as usize).or(Some(0)),
        _ => r.samples(2),
    };
    if let Some(l) = &law {
        if !l.is_centered() {
            r.error("model.law", format!("the scaling limit needs a centered law, mean is {}", l.mean()));
            return None;
        }
    }
    Some(Experiment::EcfSweep(SweepParams {
        region: region?,
        law: law?,
        kernel: kernel?,
        z_values: z_values?,
        target: target?,
        method: method?,
        f: f?,
        t_grid: t_grid?,
        samples: samples?,
    }))
}

fn read_blockspin(r: &mut Reader<'_>) -> Option<Experiment> {
    let d = r.dim();
    let params = r.kernel_params(d);
    let law = r.law();
    let z_values = r.z_values();
    let f = r.test_function(d);
    let t_grid = r.t_grid();
    Some(Experiment::Blockspin(BlockspinParams {
        params: params?,
        law: law?,
        z_values: z_values?,
        f: f?,
        t_grid: t_grid?,
    }))
}

fn read_triviality(r: &mut Reader<'_>) -> Option<Experiment> {
    let region = r.region();
    let params = r.kernel_params(box_dim(&region));
    let law = r.law();
    let alpha = r.real("model.alpha", Bound::Positive);
    let z_values = r.z_values();
    let samples = r.int_opt("sampling.samples", 2).map(|n| n as usize).unwrap_or(0);
    let mc_z_max = r.real_opt("sampling.mc_z_max", Bound::NonNegative).unwrap_or(f64::INFINITY);
    let cells = r.int_opt("sampling.cells_per_axis", 1).unwrap_or(8) as usize;
    if let Some(l) = &law {
        if !l.is_symmetric() {
            r.error("model.law", "must be symmetric for the normalizer to be real");
            return None;
        }
    }
    Some(Experiment::Triviality(TrivialityParams {
        params: params?,
        region: region?,
        law: law?,
        alpha: alpha?,
        z_values: z_values?,
        samples,
        mc_z_max,
        cells_per_axis: cells,
    }))
}

fn read_expansion(r: &mut Reader<'_>) -> Option<Experiment> {
    let region = r.region();
    let d = box_dim(&region);
    let params = r.kernel_params(d);
    let z = r.real("model.z", Bound::Positive);
    let law = r.law();
    let epsilon = r.real("model.epsilon", Bound::Positive);
    let potential: Option<PotentialSpec> = r.parsed("model.potential");
    let f = r.test_function(d);
    let t_grid = r.t_grid();
    let order = r.int("expansion.order", 0);
    let n_pad = r.real_opt("expansion.n_pad", Bound::Positive).unwrap_or(10.0);
    let mc_samples = r.int_opt("expansion.mc_samples", 2).unwrap_or(0) as usize;
    let y_panels = r.int_opt("expansion.y_panels", 1).unwrap_or(2) as usize;
    if let Some(n) = order {
        if n > 2 {
            r.error("expansion.order", format!("must be 0, 1 or 2, got {n}"));
            return None;
        }
        if mc_samples > 0 && n != 1 {
            r.error("expansion.mc_samples", "the Monte Carlo cross-check exists for order 1 only");
            return None;
        }
    }
    if let Some(p) = &potential {
        if !matches!(p, PotentialSpec::Trigonometric { .. } | PotentialSpec::RenormalizedCosine { .. }) {
            r.error("model.potential", "must be trigonometric or renormalized-cosine");
            return None;
        }
    }
    if let Some(l) = &law {
        if !l.is_centered() {
            r.error("model.law", format!("must be centered, mean is {}", l.mean()));
            return None;
        }
    }
    Some(Experiment::Expansion(ExpansionParams {
        params: params?,
        region: region?,
        z: z?,
        law: law?,
        epsilon: epsilon?,
        potential: potential?,
        f: f?,
        t_grid: t_grid?,
        order: order? as usize,
        n_pad,
        mc_samples,
        y_panels,
    }))
}
