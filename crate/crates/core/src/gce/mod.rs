//! Grand-canonical Metropolis sampling of the finite-volume Gibbs measure
//! and a brute-force low-occupancy oracle.

mod brute;
mod chain;

pub use brute::{brute_force_gce, BruteForce, BruteForceOptions, BruteObservable};
pub use chain::{
    parse_thinned_record, run_chain, run_chain_with_sink, run_chains, thinned_record, ChainResult,
    Observable, ThinnedSample,
};

use thiserror::Error;

use crate::field::{FieldError, FieldKernel};
use crate::noise::{ChargeConfiguration, ChargeLaw, Cuboid, NoiseError};
use crate::potential::{
    delta_energy, interaction_energy, InteractionDomain, Move, PotentialError, PotentialSpec,
};
use crate::stats::{RngStream, StatsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GceError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("truncation bound {bound:.3e} exceeds the tolerance {tolerance:.3e}; raise n_max")]
    Truncation { bound: f64, tolerance: f64 },
    #[error("cached energy {cached} drifted from the recomputed {recomputed} at step {step}")]
    Drift { step: u64, cached: f64, recomputed: f64 },
}

/// Proposal probabilities of the four moves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveMix {
    pub insert: f64,
    pub delete: f64,
    pub displace: f64,
    pub recharge: f64,
}

impl Default for MoveMix {
    fn default() -> Self {
        Self {
            insert: 0.3,
            delete: 0.3,
            displace: 0.3,
            recharge: 0.1,
        }
    }
}

impl MoveMix {
    fn as_array(&self) -> [f64; 4] {
        [self.insert, self.delete, self.displace, self.recharge]
    }

    fn validate(&self) -> Result<(), GceError> {
        let p = self.as_array();
        if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(GceError::Config(format!("move probabilities must be nonnegative, got {p:?}")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(GceError::Config(format!("move probabilities sum to {total}, not 1")));
        }
        if (self.insert > 0.0) != (self.delete > 0.0) {
            return Err(GceError::Config("insertion and deletion must both be enabled or both off".into()));
        }
        Ok(())
    }

    fn pick(&self, u: f64) -> MoveKind {
        let mut acc = self.insert;
        if u < acc {
            return MoveKind::Insert;
        }
        acc += self.delete;
        if u < acc {
            return MoveKind::Delete;
        }
        acc += self.displace;
        if u < acc || self.recharge == 0.0 {
            return MoveKind::Displace;
        }
        MoveKind::Recharge
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Insert,
    Delete,
    Displace,
    Recharge,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [Self::Insert, Self::Delete, Self::Displace, Self::Recharge];

    fn slot(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Insert => "insert",
            Self::Delete => "delete",
            Self::Displace => "displace",
            Self::Recharge => "recharge",
        }
    }
}

/// Everything that defines one chain.
#[derive(Clone, Debug)]
pub struct GceConfig {
    pub region: Cuboid,
    pub z: f64,
    pub lambda: f64,
    pub law: ChargeLaw,
    pub kernel: FieldKernel,
    pub potential: PotentialSpec,
    pub domain: InteractionDomain,
    pub mix: MoveMix,
    pub sigma_disp: f64,
    /// Total steps, burn-in included.
    pub steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub seed: u64,
    pub stream: u64,
    /// Recorded samples per batch mean.
    pub batch_size: u64,
    /// Steps between full recomputations of the cached energy.
    pub drift_interval: u64,
}

impl GceConfig {
    /// Defaults: move mix (0.3, 0.3, 0.3, 0.1), σ_disp = 0.5/m (R/2 for the
    /// indicator kernel), 10⁵ steps with 10⁴ burn-in, no thinning.
    pub fn new(
        region: Cuboid,
        z: f64,
        lambda: f64,
        law: ChargeLaw,
        kernel: FieldKernel,
        potential: PotentialSpec,
    ) -> Result<Self, GceError> {
        let sigma_disp = match (&kernel, kernel.params()) {
            (_, Some(p)) => 0.5 / p.mass(),
            (FieldKernel::Indicator(k), None) => 0.5 * k.radius(),
            _ => unreachable!("every non-indicator kernel carries a mass"),
        };
        let cfg = Self {
            region,
            z,
            lambda,
            law,
            kernel,
            potential,
            domain: InteractionDomain::default(),
            mix: MoveMix::default(),
            sigma_disp,
            steps: 100_000,
            burn_in: 10_000,
            thinning: 1,
            seed: 0,
            stream: 0,
            batch_size: 1000,
            drift_interval: 10_000,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GceError> {
        if !(self.z > 0.0 && self.z.is_finite()) {
            return Err(GceError::Config(format!("activity z must be positive, got {}", self.z)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(GceError::Config(format!("coupling must be nonnegative, got {}", self.lambda)));
        }
        self.mix.validate()?;
        if !(self.sigma_disp > 0.0 && self.sigma_disp.is_finite()) {
            return Err(GceError::Config(format!("σ_disp must be positive, got {}", self.sigma_disp)));
        }
        if self.steps <= self.burn_in {
            return Err(GceError::Config(format!(
                "steps ({}) must exceed burn-in ({})",
                self.steps, self.burn_in
            )));
        }
        if self.thinning == 0 || self.batch_size == 0 || self.drift_interval == 0 {
            return Err(GceError::Config("thinning, batch size and drift interval must be positive".into()));
        }
        if self.region.dim() != self.kernel_dim().unwrap_or(self.region.dim()) {
            return Err(GceError::Config("kernel and box dimensions differ".into()));
        }
        Ok(())
    }

    fn kernel_dim(&self) -> Option<usize> {
        self.kernel.params().map(|p| p.dim())
    }

    fn tracks_energy(&self) -> bool {
        self.lambda > 0.0
    }

    /// z|Λ|
    pub fn mean_occupancy(&self) -> f64 {
        self.z * self.region.volume()
    }
}

/// Current configuration, cached energy and move statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerState {
    pub config: ChargeConfiguration,
    /// U of `config`; NaN when λ = 0, where the energy never enters.
    pub energy: f64,
    pub step: u64,
    pub proposed: [u64; 4],
    pub accepted: [u64; 4],
    /// Largest |recomputed − cached| seen by the periodic check.
    pub max_drift: f64,
}

impl SamplerState {
    pub fn empty(cfg: &GceConfig) -> Self {
        Self {
            config: ChargeConfiguration::empty(cfg.region.clone()),
            energy: if cfg.tracks_energy() { 0.0 } else { f64::NAN },
            step: 0,
            proposed: [0; 4],
            accepted: [0; 4],
            max_drift: 0.0,
        }
    }

    pub fn from_configuration(cfg: &GceConfig, config: ChargeConfiguration) -> Result<Self, GceError> {
        let energy = if cfg.tracks_energy() {
            interaction_energy(&config, &cfg.kernel, &cfg.potential, &cfg.domain)?
        } else {
            f64::NAN
        };
        Ok(Self {
            config,
            energy,
            ..Self::empty(cfg)
        })
    }

    pub fn acceptance_rate(&self, kind: MoveKind) -> f64 {
        let i = kind.slot();
        if self.proposed[i] == 0 {
            f64::NAN
        } else {
            self.accepted[i] as f64 / self.proposed[i] as f64
        }
    }

    /// Recompute U and compare with the cache; the cache is then refreshed.
    pub fn check_drift(&mut self, cfg: &GceConfig) -> Result<f64, GceError> {
        if !cfg.tracks_energy() {
            return Ok(0.0);
        }
        let fresh = interaction_energy(&self.config, &cfg.kernel, &cfg.potential, &cfg.domain)?;
        let drift = if fresh == self.energy { 0.0 } else { (fresh - self.energy).abs() };
        if !(drift < 10.0 * cfg.domain.abs_tol) {
            return Err(GceError::Drift {
                step: self.step,
                cached: self.energy,
                recomputed: fresh,
            });
        }
        self.max_drift = self.max_drift.max(drift);
        self.energy = fresh;
        Ok(drift)
    }
}

/// Metropolis weight ratio·e^{−λΔU}, with +∞ energy changes giving 0.
fn boltzmann(ratio: f64, lambda: f64, du: f64) -> f64 {
    if lambda == 0.0 || du == 0.0 {
        return ratio;
    }
    ratio * (-lambda * du).exp()
}

/// Acceptance of inserting one particle into n.
pub fn insert_acceptance(cfg: &GceConfig, n: usize, du: f64) -> f64 {
    let ratio = cfg.mean_occupancy() / (n + 1) as f64 * (cfg.mix.delete / cfg.mix.insert);
    boltzmann(ratio, cfg.lambda, du).min(1.0)
}

/// Acceptance of deleting one of n particles.
pub fn delete_acceptance(cfg: &GceConfig, n: usize, du: f64) -> f64 {
    let ratio = n as f64 / cfg.mean_occupancy() * (cfg.mix.insert / cfg.mix.delete);
    boltzmann(ratio, cfg.lambda, du).min(1.0)
}

/// Acceptance of a displacement or recharge.
pub fn local_acceptance(cfg: &GceConfig, du: f64) -> f64 {
    boltzmann(1.0, cfg.lambda, du).min(1.0)
}

/// Unnormalized Gibbs weight of an ordered particle tuple:
/// zⁿ/n! · Π p_{s_j} · e^{−λU}.
pub fn gibbs_density(cfg: &GceConfig, config: &ChargeConfiguration) -> Result<f64, GceError> {
    let n = config.len();
    let mut w = 1.0;
    for (k, &s) in config.charges().iter().enumerate() {
        w *= cfg.z * cfg.law.probability(s) / (k + 1) as f64;
    }
    if cfg.tracks_energy() && n > 0 {
        let u = interaction_energy(config, &cfg.kernel, &cfg.potential, &cfg.domain)?;
        w = boltzmann(w, cfg.lambda, u);
    }
    Ok(w)
}

/// Probability flows η → η + (y, s) and back, for ordered tuples: insertion
/// draws the position density 1/|Λ|, the charge p_s and one of n + 1 slots;
/// deletion picks one of n + 1 particles.
pub fn insertion_flows(
    cfg: &GceConfig,
    config: &ChargeConfiguration,
    y: &[f64],
    s: f64,
) -> Result<(f64, f64), GceError> {
    let n = config.len();
    let mut after = config.clone();
    after.push(y, s)?;
    let pi0 = gibbs_density(cfg, config)?;
    let pi1 = gibbs_density(cfg, &after)?;
    let du = if cfg.tracks_energy() {
        delta_energy(
            config,
            &cfg.kernel,
            &cfg.potential,
            &cfg.domain,
            &Move::Insert {
                position: y.to_vec(),
                charge: s,
            },
        )?
    } else {
        0.0
    };
    let slots = (n + 1) as f64;
    let forward = pi0 * cfg.mix.insert * cfg.law.probability(s) / cfg.region.volume() / slots
        * insert_acceptance(cfg, n, du);
    let backward = pi1 * cfg.mix.delete / slots * delete_acceptance(cfg, n + 1, -du);
    Ok((forward, backward))
}

/// What one Metropolis step did.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub kind: MoveKind,
    pub accepted: bool,
}

/// One Metropolis step. Random draws, in order: the move type, the
/// proposal (index, then position or charge), then the acceptance uniform;
/// proposals that are rejected outright skip the acceptance draw.
pub fn mcmc_step(state: &mut SamplerState, cfg: &GceConfig, rng: &mut RngStream) -> Result<StepOutcome, GceError> {
    let kind = cfg.mix.pick(rng.uniform());
    state.step += 1;
    state.proposed[kind.slot()] += 1;
    let n = state.config.len();
    let d = cfg.region.dim();
    let (mv, ratio_fn): (Move, fn(&GceConfig, usize, f64) -> f64) = match kind {
        MoveKind::Insert => {
            let mut y = vec![0.0; d];
            cfg.region.sample_uniform(rng, &mut y);
            let s = cfg.law.sample(rng);
            (Move::Insert { position: y, charge: s }, insert_acceptance)
        }
        MoveKind::Delete => {
            if n == 0 {
                return Ok(StepOutcome { kind, accepted: false });
            }
            let index = rng.below(n as u64) as usize;
            (Move::Delete { index }, delete_acceptance)
        }
        MoveKind::Displace => {
            if n == 0 {
                return Ok(StepOutcome { kind, accepted: false });
            }
            let index = rng.below(n as u64) as usize;
            let position: Vec<f64> = state
                .config
                .position(index)
                .iter()
                .map(|&x| x + cfg.sigma_disp * rng.normal())
                .collect();
            if !cfg.region.contains(&position) {
                return Ok(StepOutcome { kind, accepted: false });
            }
            (Move::Displace { index, position }, |c, _, du| local_acceptance(c, du))
        }
        MoveKind::Recharge => {
            if n == 0 {
                return Ok(StepOutcome { kind, accepted: false });
            }
            let index = rng.below(n as u64) as usize;
            let charge = cfg.law.sample(rng);
            (Move::Recharge { index, charge }, |c, _, du| local_acceptance(c, du))
        }
    };
    let du = if cfg.tracks_energy() {
        delta_energy(&state.config, &cfg.kernel, &cfg.potential, &cfg.domain, &mv)?
    } else {
        0.0
    };
    let a = ratio_fn(cfg, n, du);
    let accepted = a > 0.0 && rng.uniform() < a;
    if accepted {
        match mv {
            Move::Insert { position, charge } => state.config.push(&position, charge)?,
            Move::Delete { index } => {
                state.config.swap_remove(index);
            }
            Move::Displace { index, position } => state.config.set_position(index, &position)?,
            Move::Recharge { index, charge } => state.config.set_charge(index, charge),
        }
        if cfg.tracks_energy() {
            if du == f64::NEG_INFINITY {
                state.energy = interaction_energy(&state.config, &cfg.kernel, &cfg.potential, &cfg.domain)?;
            } else if du != 0.0 {
                state.energy += du;
            }
        }
        state.accepted[kind.slot()] += 1;
    }
    Ok(StepOutcome { kind, accepted })
}

#[cfg(test)]
mod tests;
