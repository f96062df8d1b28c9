use super::{ChargeConfiguration, ChargeLaw, Cuboid, NoiseError};
use crate::stats::RngStream;

/// Mean below which Poisson counts are drawn by inversion.
const INVERSION_LIMIT: f64 = 30.0;

/// Poisson(mean) draw: sequential inversion for small means, Hörmann's
/// transformed rejection (PTRS) above.
pub fn sample_poisson(mean: f64, rng: &mut RngStream) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < INVERSION_LIMIT {
        let u = rng.uniform();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if p == 0.0 && cdf < u {
                // rounding left a gap at the far tail
                break;
            }
        }
        return k;
    }
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    let log_mean = mean.ln();
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * log_mean - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Marked Poisson process of intensity z on the box: N ~ Poisson(z|Λ|),
/// then for each particle its position (uniform) and its charge.
pub fn sample_configuration(
    region: &Cuboid,
    z: f64,
    law: &ChargeLaw,
    rng: &mut RngStream,
) -> Result<ChargeConfiguration, NoiseError> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(NoiseError::Domain(format!("activity z must be positive, got {z}")));
    }
    let n = sample_poisson(z * region.volume(), rng);
    let mut config = ChargeConfiguration::empty(region.clone());
    let mut y = vec![0.0; region.dim()];
    for _ in 0..n {
        region.sample_uniform(rng, &mut y);
        let s = law.sample(rng);
        config.push(&y, s)?;
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::gof::chi_square_pooled;

    fn pmf(mean: f64, k: usize) -> f64 {
        (-mean + k as f64 * mean.ln() - libm::lgamma(k as f64 + 1.0)).exp()
    }

    fn check_distribution(mean: f64, seed: u64) {
        let n = 100_000;
        let mut rng = RngStream::new(seed, 0);
        let kmax = (mean + 12.0 * mean.sqrt() + 20.0) as usize;
        let mut obs = vec![0.0; kmax + 1];
        for _ in 0..n {
            let k = sample_poisson(mean, &mut rng) as usize;
            obs[k.min(kmax)] += 1.0;
        }
        let mut exp: Vec<f64> = (0..=kmax).map(|k| n as f64 * pmf(mean, k)).collect();
        let tail: f64 = n as f64 - exp[..kmax].iter().sum::<f64>();
        exp[kmax] = tail.max(0.0);
        let r = chi_square_pooled(&obs, &exp, 5.0);
        assert!(r.p_value > 1e-3, "mean {mean}: p = {}", r.p_value);
    }

    #[test]
    fn inversion_branch_is_poisson() {
        check_distribution(3.2, 1);
        check_distribution(29.0, 2);
    }

    #[test]
    fn rejection_branch_is_poisson() {
        check_distribution(32.0, 3);
        check_distribution(1152.0, 4);
    }

    #[test]
    fn sampler_contract() {
        let b = Cuboid::cube(2, 0.0, 4.0).unwrap();
        let law = ChargeLaw::point_mass(1.0).unwrap();
        assert!(sample_configuration(&b, 0.0, &law, &mut RngStream::new(0, 0)).is_err());
        let mut rng = RngStream::new(9, 1);
        let draws = 10_000;
        let mut total = 0usize;
        for _ in 0..draws {
            let c = sample_configuration(&b, 2.0, &law, &mut rng).unwrap();
            assert!(c.iter().all(|(y, s)| b.contains(y) && s == 1.0));
            total += c.len();
        }
        let mean = total as f64 / draws as f64;
        assert!((mean - 32.0).abs() < 3.0 * (32.0 / draws as f64).sqrt());
        let a = sample_configuration(&b, 2.0, &law, &mut RngStream::new(4, 4)).unwrap();
        let c = sample_configuration(&b, 2.0, &law, &mut RngStream::new(4, 4)).unwrap();
        assert_eq!(a, c);
    }
}
