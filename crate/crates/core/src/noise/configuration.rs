use std::fmt::Write as _;

use super::{ChargeLaw, Cuboid, NoiseError, TestFunction};

/// Finite marked point configuration η = Σ_j s_j δ_{y_j} inside a box.
///
/// Storage order is an implementation detail; every observable is
/// permutation invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeConfiguration {
    region: Cuboid,
    positions: Vec<f64>,
    charges: Vec<f64>,
}

impl ChargeConfiguration {
    pub fn empty(region: Cuboid) -> Self {
        Self {
            region,
            positions: Vec::new(),
            charges: Vec::new(),
        }
    }

    pub fn from_parts(
        region: Cuboid,
        positions: &[Vec<f64>],
        charges: &[f64],
    ) -> Result<Self, NoiseError> {
        if positions.len() != charges.len() {
            return Err(NoiseError::Domain("positions and charges differ in length".into()));
        }
        let mut c = Self::empty(region);
        for (y, &s) in positions.iter().zip(charges) {
            c.push(y, s)?;
        }
        Ok(c)
    }

    pub fn region(&self) -> &Cuboid {
        &self.region
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.positions[i * d..(i + 1) * d]
    }

    pub fn charge(&self, i: usize) -> f64 {
        self.charges[i]
    }

    pub fn charges(&self) -> &[f64] {
        &self.charges
    }

    /// Flat row-major positions.
    pub fn positions_flat(&self) -> &[f64] {
        &self.positions
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.positions
            .chunks_exact(self.dim())
            .zip(self.charges.iter().copied())
    }

    pub fn push(&mut self, y: &[f64], s: f64) -> Result<(), NoiseError> {
        if !self.region.contains(y) {
            return Err(NoiseError::Domain(format!("position {y:?} lies outside the box")));
        }
        if !s.is_finite() {
            return Err(NoiseError::Domain(format!("charge must be finite, got {s}")));
        }
        self.positions.extend_from_slice(y);
        self.charges.push(s);
        Ok(())
    }

    /// Removes particle i; the last particle takes its slot.
    pub fn swap_remove(&mut self, i: usize) -> (Vec<f64>, f64) {
        let d = self.dim();
        let n = self.len();
        let y = self.position(i).to_vec();
        let s = self.charges.swap_remove(i);
        if i + 1 != n {
            let (head, tail) = self.positions.split_at_mut((n - 1) * d);
            head[i * d..(i + 1) * d].copy_from_slice(&tail[..d]);
        }
        self.positions.truncate((n - 1) * d);
        (y, s)
    }

    pub fn set_position(&mut self, i: usize, y: &[f64]) -> Result<(), NoiseError> {
        if !self.region.contains(y) {
            return Err(NoiseError::Domain(format!("position {y:?} lies outside the box")));
        }
        let d = self.dim();
        self.positions[i * d..(i + 1) * d].copy_from_slice(y);
        Ok(())
    }

    pub fn set_charge(&mut self, i: usize, s: f64) {
        self.charges[i] = s;
    }

    /// Every charge multiplied by λ.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut c = self.clone();
        c.charges.iter_mut().for_each(|s| *s *= lambda);
        c
    }

    /// Union of two configurations, placed in `region`.
    pub fn merged(&self, other: &Self, region: Cuboid) -> Result<Self, NoiseError> {
        let mut out = Self::empty(region);
        for (y, s) in self.iter().chain(other.iter()) {
            out.push(y, s)?;
        }
        Ok(out)
    }

    /// Same particles in a different (enclosing) box.
    pub fn rehomed(&self, region: Cuboid) -> Result<Self, NoiseError> {
        self.merged(&Self::empty(self.region.clone()), region)
    }

    /// Copy with particles sorted by (position, charge), so order-dependent
    /// floating-point sums become permutation invariant.
    pub fn canonical(&self) -> Self {
        let d = self.dim();
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&i, &j| {
            let a = self.position(i);
            let b = self.position(j);
            (0..d)
                .map(|k| a[k].total_cmp(&b[k]))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.charges[i].total_cmp(&self.charges[j]))
        });
        let mut out = Self::empty(self.region.clone());
        for i in idx {
            out.positions.extend_from_slice(self.position(i));
            out.charges.push(self.charges[i]);
        }
        out
    }

    /// ⟨η, f⟩ = Σ_j s_j f(y_j).
    pub fn pair(&self, f: &TestFunction) -> f64 {
        self.iter().map(|(y, s)| s * f.eval(y)).sum()
    }
}

/// Provenance written into configuration dumps.
#[derive(Clone, Debug, PartialEq)]
pub struct DumpHeader {
    pub z: f64,
    pub law: ChargeLaw,
    pub seed: u64,
    pub stream: u64,
}

const TAG: &str = "# cpnlab-configuration";

/// Header line plus one `s y_1 … y_d` line per particle.
pub fn dump_configuration(config: &ChargeConfiguration, header: &DumpHeader) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{TAG} d={} box={} z={:.16e} law={} seed={} stream={} n={}",
        config.dim(),
        config.region(),
        header.z,
        header.law,
        header.seed,
        header.stream,
        config.len()
    )
    .unwrap();
    write_particles(&mut out, config);
    out
}

fn write_particles(out: &mut String, config: &ChargeConfiguration) {
    for (y, s) in config.iter() {
        write!(out, "{s:.16e}").unwrap();
        for v in y {
            write!(out, " {v:.16e}").unwrap();
        }
        out.push('\n');
    }
}

pub fn load_configuration(text: &str) -> Result<(ChargeConfiguration, DumpHeader), NoiseError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix(TAG))
        .ok_or_else(|| NoiseError::Parse("missing configuration header".into()))?;
    let mut fields = std::collections::HashMap::new();
    for f in header.split_whitespace() {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| NoiseError::Parse(format!("malformed header field `{f}`")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| NoiseError::Parse(format!("header lacks `{k}`")))
    };
    let num = |k: &str| -> Result<f64, NoiseError> {
        get(k)?.parse().map_err(|_| NoiseError::Parse(format!("bad `{k}`")))
    };
    let int = |k: &str| -> Result<u64, NoiseError> {
        get(k)?.parse().map_err(|_| NoiseError::Parse(format!("bad `{k}`")))
    };
    let region: Cuboid = get("box")?.parse()?;
    let d = int("d")? as usize;
    if d != region.dim() {
        return Err(NoiseError::Parse("box dimension disagrees with d".into()));
    }
    let hdr = DumpHeader {
        z: num("z")?,
        law: get("law")?.parse()?,
        seed: int("seed")?,
        stream: int("stream")?,
    };
    let n = int("n")? as usize;
    let mut config = ChargeConfiguration::empty(region);
    let mut y = vec![0.0; d];
    for line in lines {
        let vals = line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| NoiseError::Parse(e.to_string()))?;
        if vals.len() != d + 1 {
            return Err(NoiseError::Parse(format!("expected {} columns", d + 1)));
        }
        y.copy_from_slice(&vals[1..]);
        config.push(&y, vals[0])?;
    }
    if config.len() != n {
        return Err(NoiseError::Parse(format!(
            "header announces {n} particles, found {}",
            config.len()
        )));
    }
    Ok((config, hdr))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Cuboid {
        Cuboid::cube(2, 0.0, 1.0).unwrap()
    }

    #[test]
    fn push_checks_containment() {
        let mut c = ChargeConfiguration::empty(unit());
        assert!(c.push(&[0.5, 0.5], 1.0).is_ok());
        assert!(c.push(&[1.5, 0.5], 1.0).is_err());
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn swap_remove_keeps_the_rest() {
        let mut c = ChargeConfiguration::from_parts(
            unit(),
            &[vec![0.1, 0.1], vec![0.2, 0.2], vec![0.3, 0.3]],
            &[1.0, 2.0, 3.0],
        )
        .unwrap();
        let (y, s) = c.swap_remove(0);
        assert_eq!((y, s), (vec![0.1, 0.1], 1.0));
        assert_eq!(c.position(0), &[0.3, 0.3]);
        assert_eq!(c.charge(1), 2.0);
        c.swap_remove(1);
        c.swap_remove(0);
        assert!(c.is_empty());
    }

    #[test]
    fn pairing_examples() {
        let f = TestFunction::bump(vec![0.0, 0.0], 1.0, 0.5).unwrap();
        let empty = ChargeConfiguration::empty(unit());
        assert_eq!(empty.pair(&f), 0.0);
        let one = ChargeConfiguration::from_parts(unit(), &[vec![0.0, 0.0]], &[2.0]).unwrap();
        assert_eq!(one.pair(&f), 1.0);
    }

    #[test]
    fn dump_round_trip() {
        let c = ChargeConfiguration::from_parts(
            unit(),
            &[vec![0.1, 1.0 / 3.0], vec![0.9, 0.2]],
            &[1.0, -1.0],
        )
        .unwrap();
        let h = DumpHeader {
            z: 2.0,
            law: ChargeLaw::two_point_symmetric(1.0).unwrap(),
            seed: 7,
            stream: 3,
        };
        let (back, hb) = load_configuration(&dump_configuration(&c, &h)).unwrap();
        assert_eq!(back, c);
        assert_eq!(hb, h);
    }
}
