use std::fmt;

use super::PotentialError;

/// Energy density v with v(0) = 0.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    /// Σ_k w_k (cos(α_k φ) − 1)
    Trigonometric { terms: Vec<(f64, f64)> },
    /// (cos(α φ) − 1)/N
    RenormalizedCosine { alpha: f64, normalizer: f64 },
    /// 0 below θ, +∞ at or above.
    HardWall { threshold: f64 },
    /// 0 below C, 1 at or above.
    Trigger { level: f64 },
    /// φ²
    Quadratic,
}

impl PotentialSpec {
    pub fn trigonometric(terms: Vec<(f64, f64)>) -> Result<Self, PotentialError> {
        if terms.is_empty() {
            return Err(PotentialError::Domain("trigonometric potential needs a term".into()));
        }
        for &(w, a) in &terms {
            if !w.is_finite() || !a.is_finite() || a == 0.0 {
                return Err(PotentialError::Domain(format!(
                    "term ({w}, {a}): weight finite and frequency finite and nonzero required"
                )));
            }
        }
        Ok(Self::Trigonometric { terms })
    }

    pub fn renormalized_cosine(alpha: f64, normalizer: f64) -> Result<Self, PotentialError> {
        if !alpha.is_finite() || alpha == 0.0 {
            return Err(PotentialError::Domain(format!("frequency must be nonzero, got {alpha}")));
        }
        if !(normalizer > 0.0 && normalizer.is_finite()) {
            return Err(PotentialError::Domain(format!(
                "normalizer must be positive, got {normalizer}"
            )));
        }
        Ok(Self::RenormalizedCosine { alpha, normalizer })
    }

    pub fn hard_wall(threshold: f64) -> Result<Self, PotentialError> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(PotentialError::Domain(format!("threshold must be positive, got {threshold}")));
        }
        Ok(Self::HardWall { threshold })
    }

    pub fn trigger(level: f64) -> Result<Self, PotentialError> {
        if !(level > 0.0 && level.is_finite()) {
            return Err(PotentialError::Domain(format!("trigger level must be positive, got {level}")));
        }
        Ok(Self::Trigger { level })
    }

    #[inline]
    pub fn value(&self, phi: f64) -> f64 {
        match self {
            Self::Trigonometric { terms } => terms.iter().map(|&(w, a)| w * cos_minus_one(a * phi)).sum(),
            Self::RenormalizedCosine { alpha, normalizer } => cos_minus_one(alpha * phi) / normalizer,
            Self::HardWall { threshold } => {
                if phi >= *threshold {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Self::Trigger { level } => {
                if phi >= *level {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Quadratic => phi * phi,
        }
    }

    /// sup |v| over finite values, None when unbounded.
    pub fn bound(&self) -> Option<f64> {
        match self {
            Self::Trigonometric { terms } => Some(2.0 * terms.iter().map(|t| t.0.abs()).sum::<f64>()),
            Self::RenormalizedCosine { normalizer, .. } => Some(2.0 / normalizer),
            Self::HardWall { .. } => Some(0.0),
            Self::Trigger { .. } => Some(1.0),
            Self::Quadratic => None,
        }
    }

    /// sup |v′| where finite.
    pub fn derivative_bound(&self) -> Option<f64> {
        match self {
            Self::Trigonometric { terms } => Some(terms.iter().map(|&(w, a)| (w * a).abs()).sum()),
            Self::RenormalizedCosine { alpha, normalizer } => Some(alpha.abs() / normalizer),
            _ => None,
        }
    }

    /// Same density divided by a positive constant.
    pub fn divided_by(&self, c: f64) -> Result<Self, PotentialError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(PotentialError::Domain(format!("divisor must be positive, got {c}")));
        }
        match self {
            Self::Trigonometric { terms } => Self::trigonometric(terms.iter().map(|&(w, a)| (w / c, a)).collect()),
            Self::RenormalizedCosine { alpha, normalizer } => Self::renormalized_cosine(*alpha, normalizer * c),
            _ => Err(PotentialError::Domain("only cosine densities can be rescaled".into())),
        }
    }
}

/// cos x − 1 without cancellation near 0.
#[inline]
pub(crate) fn cos_minus_one(x: f64) -> f64 {
    let h = (0.5 * x).sin();
    -2.0 * h * h
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Trigonometric { terms } => {
                write!(f, "trigonometric:")?;
                for (i, (w, a)) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{w:.16e}@{a:.16e}")?;
                }
                Ok(())
            }
            Self::RenormalizedCosine { alpha, normalizer } => {
                write!(f, "renormalized-cosine:{alpha:.16e}@{normalizer:.16e}")
            }
            Self::HardWall { threshold } => write!(f, "hard-wall:{threshold:.16e}"),
            Self::Trigger { level } => write!(f, "trigger:{level:.16e}"),
            Self::Quadratic => write!(f, "quadratic"),
        }
    }
}

impl std::str::FromStr for PotentialSpec {
    type Err = PotentialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PotentialError::Domain(format!("malformed potential `{s}`"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let pair = |v: &str| -> Result<(f64, f64), PotentialError> {
            let (a, b) = v.split_once('@').ok_or_else(bad)?;
            Ok((num(a)?, num(b)?))
        };
        if s.trim() == "quadratic" {
            return Ok(Self::Quadratic);
        }
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "trigonometric" => Self::trigonometric(rest.split(';').map(pair).collect::<Result<_, _>>()?),
            "renormalized-cosine" => {
                let (a, n) = pair(rest)?;
                Self::renormalized_cosine(a, n)
            }
            "hard-wall" => Self::hard_wall(num(rest)?),
            "trigger" => Self::trigger(num(rest)?),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn display_parse_round_trip() {
        let specs = [
            PotentialSpec::trigonometric(vec![(1.0, 1.0), (-0.5, 3.0 / 7.0)]).unwrap(),
            PotentialSpec::renormalized_cosine(5.0, 0.3).unwrap(),
            PotentialSpec::hard_wall(2.0).unwrap(),
            PotentialSpec::trigger(0.1).unwrap(),
            PotentialSpec::Quadratic,
        ];
        for s in specs {
            assert_eq!(s.to_string().parse::<PotentialSpec>().unwrap(), s);
        }
        assert!("trigonometric:1".parse::<PotentialSpec>().is_err());
        assert!("hard-wall:-1".parse::<PotentialSpec>().is_err());
        assert!("cubic".parse::<PotentialSpec>().is_err());
    }

    #[test]
    fn normalization_and_examples() {
        let specs = [
            PotentialSpec::trigonometric(vec![(1.0, 1.0), (-0.5, 3.0)]).unwrap(),
            PotentialSpec::renormalized_cosine(5.0, 0.3).unwrap(),
            PotentialSpec::hard_wall(2.0).unwrap(),
            PotentialSpec::trigger(1.0).unwrap(),
            PotentialSpec::Quadratic,
        ];
        for s in &specs {
            assert_eq!(s.value(0.0), 0.0, "{s}");
        }
        let t = PotentialSpec::trigonometric(vec![(1.0, 1.0)]).unwrap();
        assert!((t.value(PI) + 2.0).abs() < 1e-15);
        let h = PotentialSpec::hard_wall(2.0).unwrap();
        assert_eq!(h.value(1.9), 0.0);
        assert_eq!(h.value(2.1), f64::INFINITY);
        assert_eq!(h.value(2.0), f64::INFINITY);
        assert!(PotentialSpec::trigonometric(vec![(1.0, 0.0)]).is_err());
        assert!(PotentialSpec::hard_wall(0.0).is_err());
    }

    #[test]
    fn division_rescales_values() {
        let v = PotentialSpec::trigonometric(vec![(0.7, 2.0)]).unwrap();
        let w = v.divided_by(0.25).unwrap();
        for phi in [0.1, 1.3, -4.0] {
            assert!((w.value(phi) - v.value(phi) / 0.25).abs() < 1e-14);
        }
    }
}
