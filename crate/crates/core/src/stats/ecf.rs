use num_complex::Complex64;

use super::StatsError;

/// Two-sided 99% normal quantile used for the conservative CF band.
pub const Z99: f64 = 2.58;

/// Empirical characteristic function at one frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EcfPoint {
    pub t: f64,
    pub estimate: Complex64,
    /// Conservative 99% radius, valid for any bounded complex variable.
    pub ci99_radius: f64,
    /// Plug-in standard errors of the real and imaginary parts.
    pub stderr_re: f64,
    pub stderr_im: f64,
}

impl EcfPoint {
    /// Whether `value` lies inside a k-sigma box around the estimate, using
    /// the plug-in standard errors.
    pub fn within_sigma(&self, value: Complex64, k: f64) -> bool {
        let d = self.estimate - value;
        d.re.abs() <= k * self.stderr_re && d.im.abs() <= k * self.stderr_im
    }

    /// Standard error of |estimate - value| for a fixed reference value,
    /// projected on the direction of the discrepancy.
    pub fn stderr_of_distance(&self, value: Complex64) -> f64 {
        let d = self.estimate - value;
        let n = d.norm();
        if n == 0.0 {
            return self.stderr_re.max(self.stderr_im);
        }
        let (cr, ci) = (d.re / n, d.im / n);
        ((cr * self.stderr_re).powi(2) + (ci * self.stderr_im).powi(2)).sqrt()
    }
}

/// Empirical characteristic function (1/N) Σ exp(i t X_k) on a t grid.
pub fn ecf_estimate(samples: &[f64], t_grid: &[f64]) -> Result<Vec<EcfPoint>, StatsError> {
    let n = samples.len();
    if n < 100 {
        return Err(StatsError::Domain(format!(
            "empirical characteristic function needs at least 100 samples, got {n}"
        )));
    }
    let nf = n as f64;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let (mut sc, mut ss, mut sc2, mut ss2) = (0.0, 0.0, 0.0, 0.0);
            for &x in samples {
                let (s, c) = (t * x).sin_cos();
                sc += c;
                ss += s;
                sc2 += c * c;
                ss2 += s * s;
            }
            let (mc, ms) = (sc / nf, ss / nf);
            let var_c = ((sc2 / nf - mc * mc) * nf / (nf - 1.0)).max(0.0);
            let var_s = ((ss2 / nf - ms * ms) * nf / (nf - 1.0)).max(0.0);
            let estimate = if t == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(mc, ms)
            };
            EcfPoint {
                t,
                estimate,
                ci99_radius: Z99 * (1.0 / nf).sqrt(),
                stderr_re: (var_c / nf).sqrt(),
                stderr_im: (var_s / nf).sqrt(),
            }
        })
        .collect())
}

/// Symmetric grid of `n` points on [-t_max, t_max]; includes 0 when n is odd.
pub fn symmetric_grid(t_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let mid = (n - 1) as f64 / 2.0;
    (0..n)
        .map(|i| {
            let v = t_max * (i as f64 - mid) / mid;
            if (i as f64 - mid).abs() < 1e-12 {
                0.0
            } else {
                v
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RngStream;

    #[test]
    fn zero_frequency_is_one() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.37).collect();
        let p = ecf_estimate(&xs, &[0.0]).unwrap();
        assert_eq!(p[0].estimate, Complex64::new(1.0, 0.0));
        assert!(p[0].ci99_radius > 0.0);
    }

    #[test]
    fn constant_samples_give_pure_phase() {
        let c = 1.7;
        let xs = vec![c; 150];
        for p in ecf_estimate(&xs, &[-2.0, 0.5, 3.0]).unwrap() {
            let exact = Complex64::new(0.0, p.t * c).exp();
            assert!((p.estimate - exact).norm() < 1e-13);
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(ecf_estimate(&[0.0; 99], &[1.0]).is_err());
    }

    #[test]
    fn gaussian_cf_inside_band() {
        let grid = symmetric_grid(3.0, 21);
        let mut inside = 0;
        let mut total = 0;
        for trial in 0..5 {
            let mut r = RngStream::new(100 + trial, 0);
            let xs: Vec<f64> = (0..100_000).map(|_| r.normal()).collect();
            for p in ecf_estimate(&xs, &grid).unwrap() {
                let exact = (-p.t * p.t / 2.0).exp();
                total += 1;
                if (p.estimate.re - exact).abs() <= p.ci99_radius
                    && p.estimate.im.abs() <= p.ci99_radius
                {
                    inside += 1;
                }
            }
        }
        assert!(inside as f64 >= 0.99 * total as f64, "{inside}/{total}");
    }

    #[test]
    fn grid_contains_zero() {
        let g = symmetric_grid(5.0, 21);
        assert_eq!(g.len(), 21);
        assert_eq!(g[10], 0.0);
        assert!((g[0] + 5.0).abs() < 1e-15 && (g[20] - 5.0).abs() < 1e-15);
    }
}
