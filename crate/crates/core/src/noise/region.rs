use std::fmt;

use super::NoiseError;
use crate::stats::RngStream;

/// Axis-aligned box Λ = Π [lower_k, upper_k].
#[derive(Clone, Debug, PartialEq)]
pub struct Cuboid {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Cuboid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, NoiseError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(NoiseError::Domain(
                "box corners must be non-empty and of equal dimension".into(),
            ));
        }
        for k in 0..lower.len() {
            if !(lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k]) {
                return Err(NoiseError::Domain(format!(
                    "box axis {k}: need finite lower < upper, got [{}, {}]",
                    lower[k], upper[k]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// [a, b]^d
    pub fn cube(dim: usize, a: f64, b: f64) -> Result<Self, NoiseError> {
        Self::new(vec![a; dim], vec![b; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| 0.5 * (self.lower[k] + self.upper[k]))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&a, &b))| v >= a && v <= b)
    }

    pub fn contains_box(&self, other: &Cuboid) -> bool {
        other.dim() == self.dim()
            && (0..self.dim())
                .all(|k| other.lower[k] >= self.lower[k] && other.upper[k] <= self.upper[k])
    }

    /// Box grown by `pad` on every side.
    pub fn padded(&self, pad: f64) -> Self {
        Self {
            lower: self.lower.iter().map(|a| a - pad).collect(),
            upper: self.upper.iter().map(|b| b + pad).collect(),
        }
    }

    pub fn intersect(&self, other: &Cuboid) -> Option<Cuboid> {
        let lower: Vec<f64> = (0..self.dim())
            .map(|k| self.lower[k].max(other.lower[k]))
            .collect();
        let upper: Vec<f64> = (0..self.dim())
            .map(|k| self.upper[k].min(other.upper[k]))
            .collect();
        if (0..self.dim()).all(|k| lower[k] < upper[k]) {
            Some(Cuboid { lower, upper })
        } else {
            None
        }
    }

    /// Split in two equal halves along `axis`.
    pub fn halves(&self, axis: usize) -> (Cuboid, Cuboid) {
        let mid = 0.5 * (self.lower[axis] + self.upper[axis]);
        let mut a = self.clone();
        let mut b = self.clone();
        a.upper[axis] = mid;
        b.lower[axis] = mid;
        (a, b)
    }

    /// Uniform point, written into `out`.
    pub fn sample_uniform(&self, rng: &mut RngStream, out: &mut [f64]) {
        for k in 0..self.dim() {
            let x = self.lower[k] + self.side(k) * rng.uniform();
            out[k] = x.min(self.upper[k]);
        }
    }

    pub fn transformed(&self, iso: &Isometry) -> Cuboid {
        let a = iso.apply(&self.lower);
        let b = iso.apply(&self.upper);
        Cuboid {
            lower: a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect(),
            upper: a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        }
    }
}

impl fmt::Display for Cuboid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.dim() {
            if k > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{:.16e},{:.16e}]", self.lower[k], self.upper[k])?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Cuboid {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NoiseError::Parse(format!("malformed box `{s}`"));
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for part in s.split('x') {
            let inner = part
                .trim()
                .strip_prefix('[')
                .and_then(|p| p.strip_suffix(']'))
                .ok_or_else(bad)?;
            let (a, b) = inner.split_once(',').ok_or_else(bad)?;
            lower.push(a.trim().parse::<f64>().map_err(|_| bad())?);
            upper.push(b.trim().parse::<f64>().map_err(|_| bad())?);
        }
        Cuboid::new(lower, upper)
    }
}

/// Signed coordinate permutation followed by a translation; these are the
/// Euclidean motions that map axis-aligned boxes to axis-aligned boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    perm: Vec<usize>,
    signs: Vec<f64>,
    shift: Vec<f64>,
}

impl Isometry {
    /// y_k = signs_k · x_{perm_k} + shift_k
    pub fn new(perm: Vec<usize>, signs: Vec<f64>, shift: Vec<f64>) -> Result<Self, NoiseError> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in &perm {
            if p >= d || seen[p] {
                return Err(NoiseError::Domain("perm must be a permutation".into()));
            }
            seen[p] = true;
        }
        if signs.len() != d || shift.len() != d || signs.iter().any(|s| s.abs() != 1.0) {
            return Err(NoiseError::Domain("signs must be ±1 and shift of matching length".into()));
        }
        Ok(Self { perm, signs, shift })
    }

    pub fn translation(shift: Vec<f64>) -> Self {
        let d = shift.len();
        Self {
            perm: (0..d).collect(),
            signs: vec![1.0; d],
            shift,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.perm.len())
            .map(|k| self.signs[k] * x[self.perm[k]] + self.shift[k])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_volume() {
        assert!(Cuboid::new(vec![0.0], vec![0.0]).is_err());
        assert!(Cuboid::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let b = Cuboid::new(vec![0.0, -1.0], vec![4.0, 1.0]).unwrap();
        assert_eq!(b.volume(), 8.0);
        assert!(b.contains(&[4.0, 1.0]));
        assert!(!b.contains(&[4.1, 0.0]));
        let (l, r) = b.halves(0);
        assert_eq!(l.volume() + r.volume(), 8.0);
        assert!(b.padded(1.0).contains_box(&b));
    }

    #[test]
    fn display_parse_round_trip() {
        let b = Cuboid::new(vec![0.1, -3.0], vec![4.0, 1.0 / 3.0]).unwrap();
        let back: Cuboid = b.to_string().parse().unwrap();
        assert_eq!(b, back);
    }

    #[test]
    fn isometry_preserves_volume() {
        let b = Cuboid::new(vec![0.0, 1.0], vec![2.0, 4.0]).unwrap();
        let iso = Isometry::new(vec![1, 0], vec![-1.0, 1.0], vec![0.5, 0.0]).unwrap();
        let t = b.transformed(&iso);
        assert_eq!(t.volume(), b.volume());
        assert_eq!(t.lower(), &[-3.5, 0.0]);
    }
}
