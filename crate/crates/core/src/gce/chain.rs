use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::{mcmc_step, GceConfig, GceError, SamplerState};
use crate::field::{pair_field, FieldContext, SmoothedTest};
use crate::noise::{
    dump_configuration, load_configuration, pair_noise, ChargeConfiguration, DumpHeader, NoiseError,
    TestFunction,
};
use crate::stats::{summarize, EstimatorAccumulator, RngStream, Summary};

/// Scalar recorded on every retained step.
#[derive(Clone)]
pub enum Observable {
    /// N
    Count,
    /// Cached U (NaN when λ = 0).
    Energy,
    /// Σ_j s_j
    TotalCharge,
    /// ⟨η, f⟩
    Noise { name: String, f: TestFunction },
    /// ⟨φ, f⟩ = Σ_j s_j (K * f)(y_j)
    Field { name: String, smoothed: Arc<SmoothedTest> },
    Custom {
        name: String,
        f: Arc<dyn Fn(&ChargeConfiguration) -> f64 + Send + Sync>,
    },
}

impl Observable {
    pub fn name(&self) -> &str {
        match self {
            Self::Count => "N",
            Self::Energy => "U",
            Self::TotalCharge => "Q",
            Self::Noise { name, .. } | Self::Field { name, .. } | Self::Custom { name, .. } => name,
        }
    }

    fn eval(&self, state: &SamplerState, cfg: &GceConfig) -> f64 {
        match self {
            Self::Count => state.config.len() as f64,
            Self::Energy => state.energy,
            Self::TotalCharge => state.config.charges().iter().sum(),
            Self::Noise { f, .. } => pair_noise(&state.config, f),
            Self::Field { smoothed, .. } => pair_field(&FieldContext::new(&cfg.kernel, &state.config), smoothed),
            Self::Custom { f, .. } => f(&state.config),
        }
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Observable({})", self.name())
    }
}

/// One retained step of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ThinnedSample {
    pub step: u64,
    pub energy: f64,
    pub config: ChargeConfiguration,
}

/// Output of one or several merged chains.
#[derive(Clone, Debug)]
pub struct ChainResult {
    pub names: Vec<String>,
    pub accumulators: Vec<EstimatorAccumulator>,
    pub summaries: Vec<Summary>,
    /// occupancy[n] counts retained steps with N = n.
    pub occupancy: Vec<u64>,
    pub proposed: [u64; 4],
    pub accepted: [u64; 4],
    pub max_drift: f64,
    pub final_states: Vec<SamplerState>,
}

impl ChainResult {
    pub fn summary(&self, name: &str) -> Option<&Summary> {
        self.names.iter().position(|n| n == name).map(|i| &self.summaries[i])
    }

    pub fn retained(&self) -> u64 {
        self.occupancy.iter().sum()
    }

    fn merge(mut self, other: ChainResult) -> Result<Self, GceError> {
        for (a, b) in self.accumulators.iter_mut().zip(&other.accumulators) {
            *a = a.merge(b)?;
        }
        if other.occupancy.len() > self.occupancy.len() {
            self.occupancy.resize(other.occupancy.len(), 0);
        }
        for (n, c) in other.occupancy.iter().enumerate() {
            self.occupancy[n] += c;
        }
        for k in 0..4 {
            self.proposed[k] += other.proposed[k];
            self.accepted[k] += other.accepted[k];
        }
        self.max_drift = self.max_drift.max(other.max_drift);
        self.final_states.extend(other.final_states);
        self.summaries = self
            .accumulators
            .iter()
            .map(summarize)
            .collect::<Result<_, _>>()?;
        Ok(self)
    }
}

pub fn run_chain(cfg: &GceConfig, observables: &[Observable]) -> Result<ChainResult, GceError> {
    run_chain_with_sink(cfg, observables, &mut |_| {})
}

/// Burn-in, then every `thinning`-th step is recorded and handed to `sink`.
pub fn run_chain_with_sink(
    cfg: &GceConfig,
    observables: &[Observable],
    sink: &mut dyn FnMut(&ThinnedSample),
) -> Result<ChainResult, GceError> {
    cfg.validate()?;
    let mut rng = RngStream::new(cfg.seed, cfg.stream);
    let mut state = SamplerState::empty(cfg);
    let mut accs = observables
        .iter()
        .map(|_| EstimatorAccumulator::new(cfg.batch_size))
        .collect::<Result<Vec<_>, _>>()?;
    let mut occupancy = Vec::new();
    while state.step < cfg.steps {
        mcmc_step(&mut state, cfg, &mut rng)?;
        if state.step % cfg.drift_interval == 0 {
            state.check_drift(cfg)?;
        }
        if state.step > cfg.burn_in && (state.step - cfg.burn_in) % cfg.thinning == 0 {
            for (acc, o) in accs.iter_mut().zip(observables) {
                acc.push(o.eval(&state, cfg));
            }
            let n = state.config.len();
            if n >= occupancy.len() {
                occupancy.resize(n + 1, 0);
            }
            occupancy[n] += 1;
            sink(&ThinnedSample {
                step: state.step,
                energy: state.energy,
                config: state.config.clone(),
            });
        }
    }
    let summaries = accs.iter().map(summarize).collect::<Result<_, _>>()?;
    Ok(ChainResult {
        names: observables.iter().map(|o| o.name().to_string()).collect(),
        accumulators: accs,
        summaries,
        occupancy,
        proposed: state.proposed,
        accepted: state.accepted,
        max_drift: state.max_drift,
        final_states: vec![state],
    })
}

/// Independent chains on streams `cfg.stream + i`, run in parallel and
/// merged in stream order.
pub fn run_chains(cfg: &GceConfig, observables: &[Observable], chains: usize) -> Result<ChainResult, GceError> {
    if chains == 0 {
        return Err(GceError::Config("at least one chain is required".into()));
    }
    let results: Vec<Result<ChainResult, GceError>> = (0..chains as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.stream = cfg.stream + i;
            run_chain(&c, observables)
        })
        .collect();
    let mut it = results.into_iter();
    let mut out = it.next().unwrap()?;
    for r in it {
        out = out.merge(r?)?;
    }
    Ok(out)
}

const SAMPLE_TAG: &str = "# cpnlab-sample";

/// A retained step as text: a step/energy line, then the configuration dump.
pub fn thinned_record(sample: &ThinnedSample, cfg: &GceConfig) -> String {
    let header = DumpHeader {
        z: cfg.z,
        law: cfg.law.clone(),
        seed: cfg.seed,
        stream: cfg.stream,
    };
    format!(
        "{SAMPLE_TAG} step={} U={:.16e}\n{}",
        sample.step,
        sample.energy,
        dump_configuration(&sample.config, &header)
    )
}

pub fn parse_thinned_record(text: &str) -> Result<(ThinnedSample, DumpHeader), NoiseError> {
    let (first, rest) = text
        .split_once('\n')
        .ok_or_else(|| NoiseError::Parse("empty sample record".into()))?;
    let fields = first
        .strip_prefix(SAMPLE_TAG)
        .ok_or_else(|| NoiseError::Parse("missing sample header".into()))?;
    let mut step = None;
    let mut energy = None;
    for f in fields.split_whitespace() {
        match f.split_once('=') {
            Some(("step", v)) => step = v.parse::<u64>().ok(),
            Some(("U", v)) => energy = v.parse::<f64>().ok(),
            _ => return Err(NoiseError::Parse(format!("unexpected sample field `{f}`"))),
        }
    }
    let (config, header) = load_configuration(rest)?;
    Ok((
        ThinnedSample {
            step: step.ok_or_else(|| NoiseError::Parse("bad or missing step".into()))?,
            energy: energy.ok_or_else(|| NoiseError::Parse("bad or missing U".into()))?,
            config,
        },
        header,
    ))
}
