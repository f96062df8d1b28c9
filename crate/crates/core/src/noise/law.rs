use std::fmt;

use super::NoiseError;
use crate::stats::RngStream;

const PROB_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
enum LawKind {
    TwoPointSymmetric(f64),
    PointMass(f64),
    Discrete,
}

/// Finitely supported charge distribution on [−c, c].
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeLaw {
    kind: LawKind,
    atoms: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
    bound: f64,
    symmetric: bool,
}

impl ChargeLaw {
    /// ±c with probability ½ each.
    pub fn two_point_symmetric(c: f64) -> Result<Self, NoiseError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(NoiseError::Domain(format!("charge must be positive, got {c}")));
        }
        Self::build(LawKind::TwoPointSymmetric(c), vec![(-c, 0.5), (c, 0.5)])
    }

    pub fn point_mass(c: f64) -> Result<Self, NoiseError> {
        if !c.is_finite() {
            return Err(NoiseError::Domain(format!("charge must be finite, got {c}")));
        }
        Self::build(LawKind::PointMass(c), vec![(c, 1.0)])
    }

    /// Arbitrary atoms (value, probability).
    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self, NoiseError> {
        Self::build(LawKind::Discrete, atoms)
    }

    fn build(kind: LawKind, mut atoms: Vec<(f64, f64)>) -> Result<Self, NoiseError> {
        if atoms.is_empty() {
            return Err(NoiseError::Domain("charge law needs at least one atom".into()));
        }
        for &(v, p) in &atoms {
            if !v.is_finite() || !(p >= 0.0 && p <= 1.0) {
                return Err(NoiseError::Domain(format!(
                    "invalid atom ({v}, {p}): value must be finite, probability in [0, 1]"
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(NoiseError::Domain(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        let bound = merged.iter().map(|a| a.0.abs()).fold(0.0, f64::max);
        let symmetric = merged.iter().all(|&(v, p)| {
            merged
                .iter()
                .any(|&(w, q)| w == -v && (p - q).abs() <= PROB_TOL)
        });
        let mut acc = 0.0;
        let cumulative = merged
            .iter()
            .map(|a| {
                acc += a.1;
                acc
            })
            .collect();
        Ok(Self {
            kind,
            atoms: merged,
            cumulative,
            bound,
            symmetric,
        })
    }

    /// Atoms sorted by value, duplicates merged.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(v, p)| v * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|&(v, p)| v * v * p).sum()
    }

    /// Smallest c with supp ⊆ [−c, c].
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_centered(&self) -> bool {
        self.mean().abs() <= PROB_TOL * self.bound.max(1.0)
    }

    /// One draw; consumes a single uniform (none for a point mass).
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        if self.atoms.len() == 1 {
            return self.atoms[0].0;
        }
        let u = rng.uniform() * self.cumulative[self.cumulative.len() - 1];
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.atoms[i.min(self.atoms.len() - 1)].0
    }

    /// Probability of the atom at `value` (0 if absent).
    pub fn probability(&self, value: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| a.0 == value)
            .map(|a| a.1)
            .unwrap_or(0.0)
    }
}

impl fmt::Display for ChargeLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LawKind::TwoPointSymmetric(c) => write!(f, "two-point:{c:.16e}"),
            LawKind::PointMass(c) => write!(f, "point-mass:{c:.16e}"),
            LawKind::Discrete => {
                write!(f, "discrete:")?;
                for (i, (v, p)) in self.atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{v:.16e}@{p:.16e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::str::FromStr for ChargeLaw {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NoiseError::Parse(format!("malformed charge law `{s}`"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "two-point" => Self::two_point_symmetric(rest.parse().map_err(|_| bad())?),
            "point-mass" => Self::point_mass(rest.parse().map_err(|_| bad())?),
            "discrete" => {
                let atoms = rest
                    .split(';')
                    .map(|a| {
                        let (v, p) = a.split_once('@').ok_or_else(bad)?;
                        Ok((
                            v.trim().parse().map_err(|_| bad())?,
                            p.trim().parse().map_err(|_| bad())?,
                        ))
                    })
                    .collect::<Result<Vec<_>, NoiseError>>()?;
                Self::discrete(atoms)
            }
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_and_flags() {
        let l = ChargeLaw::two_point_symmetric(1.5).unwrap();
        assert_eq!(l.mean(), 0.0);
        assert_eq!(l.second_moment(), 2.25);
        assert!(l.is_symmetric() && l.is_centered());
        let p = ChargeLaw::point_mass(2.0).unwrap();
        assert!(!p.is_symmetric());
        assert_eq!(p.bound(), 2.0);
        let d = ChargeLaw::discrete(vec![(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]).unwrap();
        assert!(d.is_symmetric());
        let d = ChargeLaw::discrete(vec![(-1.0, 0.5), (2.0, 0.25), (-2.0, 0.25)]).unwrap();
        assert!(!d.is_symmetric());
        assert!(ChargeLaw::discrete(vec![(1.0, 0.6), (2.0, 0.6)]).is_err());
        assert!(ChargeLaw::discrete(vec![]).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        for l in [
            ChargeLaw::two_point_symmetric(0.3).unwrap(),
            ChargeLaw::point_mass(-1.0 / 3.0).unwrap(),
            ChargeLaw::discrete(vec![(0.1, 0.3), (-0.7, 0.7)]).unwrap(),
        ] {
            let back: ChargeLaw = l.to_string().parse().unwrap();
            assert_eq!(l, back);
        }
    }

    #[test]
    fn sampling_frequencies() {
        let l = ChargeLaw::discrete(vec![(-1.0, 0.2), (0.5, 0.5), (3.0, 0.3)]).unwrap();
        let mut rng = RngStream::new(5, 0);
        let n = 200_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let s = l.sample(&mut rng);
            let i = l.atoms().iter().position(|a| a.0 == s).unwrap();
            counts[i] += 1;
        }
        for (i, &(_, p)) in l.atoms().iter().enumerate() {
            let f = counts[i] as f64 / n as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
        }
    }
}
