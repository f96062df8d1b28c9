use super::StatsError;

/// Streaming mean/variance with a batch-means buffer.
///
/// Moments use Welford updates and Chan's pairwise merge. Completed batch
/// means are kept so the standard error can account for autocorrelation in
/// Markov chain output.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
    batch_size: u64,
    batch_means: Vec<f64>,
    partial_sum: f64,
    partial_count: u64,
}

impl EstimatorAccumulator {
    pub fn new(batch_size: u64) -> Result<Self, StatsError> {
        if batch_size == 0 {
            return Err(StatsError::Domain("batch size must be positive".into()));
        }
        Ok(Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            batch_size,
            batch_means: Vec::new(),
            partial_sum: 0.0,
            partial_count: 0,
        })
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);

        self.partial_sum += x;
        self.partial_count += 1;
        if self.partial_count == self.batch_size {
            self.batch_means
                .push(self.partial_sum / self.batch_size as f64);
            self.partial_sum = 0.0;
            self.partial_count = 0;
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn batch_size(&self) -> u64 {
        self.batch_size
    }

    pub fn batch_means(&self) -> &[f64] {
        &self.batch_means
    }

    /// Unbiased sample variance of the raw stream.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error assuming independent samples.
    pub fn iid_stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    /// Combine two accumulators of the same batch size.
    ///
    /// Completed batches are concatenated; leftover partial batches are
    /// pooled and close a batch once the pooled count reaches the batch size.
    pub fn merge(&self, other: &Self) -> Result<Self, StatsError> {
        if self.batch_size != other.batch_size {
            return Err(StatsError::Logic(format!(
                "cannot merge batch sizes {} and {}",
                self.batch_size, other.batch_size
            )));
        }
        let count = self.count + other.count;
        let (mean, m2) = if count == 0 {
            (0.0, 0.0)
        } else {
            let (na, nb) = (self.count as f64, other.count as f64);
            let n = count as f64;
            let delta = other.mean - self.mean;
            (
                (na * self.mean + nb * other.mean) / n,
                self.m2 + other.m2 + delta * delta * na * nb / n,
            )
        };
        let mut batch_means = self.batch_means.clone();
        batch_means.extend_from_slice(&other.batch_means);
        let mut partial_sum = self.partial_sum + other.partial_sum;
        let mut partial_count = self.partial_count + other.partial_count;
        if partial_count >= self.batch_size {
            batch_means.push(partial_sum / partial_count as f64);
            partial_sum = 0.0;
            partial_count = 0;
        }
        Ok(Self {
            count,
            mean,
            m2,
            batch_size: self.batch_size,
            batch_means,
            partial_sum,
            partial_count,
        })
    }
}

/// Mean and batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
    pub batches: usize,
}

pub fn summarize(acc: &EstimatorAccumulator) -> Result<Summary, StatsError> {
    let b = acc.batch_means.len();
    if b < 2 {
        return Err(StatsError::Domain(format!(
            "batch-means error needs at least 2 complete batches, have {b}"
        )));
    }
    let bm = acc.batch_means.iter().sum::<f64>() / b as f64;
    let var = acc
        .batch_means
        .iter()
        .map(|x| (x - bm) * (x - bm))
        .sum::<f64>()
        / (b - 1) as f64;
    Ok(Summary {
        mean: acc.mean,
        stderr: (var / b as f64).sqrt(),
        count: acc.count,
        batches: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RngStream;

    fn filled(batch: u64, xs: &[f64]) -> EstimatorAccumulator {
        let mut a = EstimatorAccumulator::new(batch).unwrap();
        xs.iter().for_each(|&x| a.push(x));
        a
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let xs: Vec<f64> = (0..57).map(|i| (i as f64).sin()).collect();
        let a = filled(10, &xs);
        let e = EstimatorAccumulator::new(10).unwrap();
        assert_eq!(a.merge(&e).unwrap(), a);
        assert_eq!(e.merge(&a).unwrap().mean(), a.mean());
    }

    #[test]
    fn merge_matches_pooled_moments() {
        let mut r = RngStream::new(5, 5);
        let xs: Vec<f64> = (0..1000).map(|_| r.normal() * 3.0 + 1.0).collect();
        let (l, rr) = xs.split_at(377);
        let m = filled(20, l).merge(&filled(20, rr)).unwrap();
        assert_eq!(m.count(), 1000);
        let pooled_mean = xs.iter().sum::<f64>() / 1000.0;
        let pooled_var =
            xs.iter().map(|x| (x - pooled_mean).powi(2)).sum::<f64>() / 999.0;
        assert!((m.mean() - pooled_mean).abs() <= 1e-12 * pooled_mean.abs());
        assert!((m.variance() - pooled_var).abs() <= 1e-12 * pooled_var);
    }

    #[test]
    fn incompatible_batches_rejected() {
        let a = EstimatorAccumulator::new(10).unwrap();
        let b = EstimatorAccumulator::new(11).unwrap();
        assert!(matches!(a.merge(&b), Err(StatsError::Logic(_))));
    }

    #[test]
    fn merge_order_does_not_change_summary() {
        let mut r = RngStream::new(8, 1);
        let parts: Vec<EstimatorAccumulator> = (0..5)
            .map(|_| {
                let xs: Vec<f64> = (0..400).map(|_| r.uniform()).collect();
                filled(50, &xs)
            })
            .collect();
        let left = parts
            .iter()
            .skip(1)
            .fold(parts[0].clone(), |acc, p| acc.merge(p).unwrap());
        let right = parts
            .iter()
            .rev()
            .skip(1)
            .fold(parts[4].clone(), |acc, p| acc.merge(p).unwrap());
        let tree = parts[0]
            .merge(&parts[1])
            .unwrap()
            .merge(&parts[2].merge(&parts[3]).unwrap().merge(&parts[4]).unwrap())
            .unwrap();
        let s = [left, right, tree].map(|a| summarize(&a).unwrap());
        for other in &s[1..] {
            assert!((other.mean - s[0].mean).abs() <= 1e-12 * s[0].mean.abs());
            assert!((other.stderr - s[0].stderr).abs() <= 1e-12 * s[0].stderr);
        }
    }

    #[test]
    fn constant_input_has_zero_error() {
        let s = summarize(&filled(10, &[2.5; 100])).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.stderr, 0.0);
    }

    #[test]
    fn too_few_batches() {
        assert!(summarize(&filled(10, &[1.0; 15])).is_err());
    }

    #[test]
    fn iid_batch_error_close_to_naive() {
        let mut r = RngStream::new(77, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| r.normal()).collect();
        let a = filled(1000, &xs);
        let s = summarize(&a).unwrap();
        let ratio = s.stderr / a.iid_stderr();
        assert!((ratio - 1.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn batch_size_consistency_on_ar1() {
        // AR(1), rho = 0.9: integrated autocorrelation time 19
        let mut r = RngStream::new(31, 4);
        let rho: f64 = 0.9;
        let mut x = 0.0;
        let xs: Vec<f64> = (0..400_000)
            .map(|_| {
                x = rho * x + (1.0 - rho * rho).sqrt() * r.normal();
                x
            })
            .collect();
        let s1 = summarize(&filled(2000, &xs)).unwrap();
        let s2 = summarize(&filled(4000, &xs)).unwrap();
        // relative sampling error of a batch-means stderr with b batches ~ 1/sqrt(2(b-1))
        let sd = s1.stderr / (2.0 * (s1.batches as f64 - 1.0)).sqrt();
        let sd2 = s2.stderr / (2.0 * (s2.batches as f64 - 1.0)).sqrt();
        assert!((s1.stderr - s2.stderr).abs() < 3.0 * (sd * sd + sd2 * sd2).sqrt());
        let exact = ((1.0 + rho) / (1.0 - rho) / xs.len() as f64).sqrt();
        assert!((s2.stderr / exact - 1.0).abs() < 0.35);
    }
}
