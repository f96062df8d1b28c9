//! Counter-based splittable random streams.
//!
//! Every draw is a keyed bijective mix of `(seed, stream id, counter)`, so a
//! stream can be reconstructed at any position and distinct stream ids can be
//! handed to independent workers without coordination.

use rand_core::{impls, Error, RngCore};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Deterministic random stream addressed by `(seed, id, counter)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    id: u64,
    counter: u64,
    k0: u64,
    k1: u64,
}

impl RngStream {
    pub fn new(seed: u64, id: u64) -> Self {
        let k0 = splitmix64(seed ^ splitmix64(id.wrapping_mul(0xd1b5_4a32_d192_ed03)));
        let k1 = splitmix64(k0 ^ id.rotate_left(29) ^ 0x2545_f491_4f6c_dd1d);
        Self {
            seed,
            id,
            counter: 0,
            k0,
            k1,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// A fresh stream sharing the seed, addressed by a different id.
    pub fn substream(&self, id: u64) -> Self {
        Self::new(self.seed, id)
    }

    /// Jump to an absolute position in the stream.
    pub fn set_counter(&mut self, counter: u64) {
        self.counter = counter;
    }

    /// Output at an absolute counter value without advancing.
    #[inline]
    pub fn at(&self, counter: u64) -> u64 {
        let mut x = counter ^ self.k0;
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
        x ^= self.k1;
        x = (x ^ (x >> 32)).wrapping_mul(0xd6e8_feb8_6659_fd93);
        x = (x ^ (x >> 32)).wrapping_mul(0xd6e8_feb8_6659_fd93);
        x ^ (x >> 32)
    }

    #[inline]
    pub fn next_raw(&mut self) -> u64 {
        let out = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_raw() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1), never exactly zero.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_raw() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (n > 0), by Lemire's widening multiply.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_raw() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Standard normal by the polar Box–Muller method (second variate discarded).
    pub fn normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_raw() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_raw()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        impls::fill_bytes_via_next(self, dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_address_same_output() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.next_raw(), b.next_raw());
        }
        let c = RngStream::new(42, 7);
        assert_eq!(c.at(500), {
            let mut d = RngStream::new(42, 7);
            d.set_counter(500);
            d.next_raw()
        });
    }

    #[test]
    fn uniform_moments() {
        let mut r = RngStream::new(1, 0);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
            s += u;
            s2 += u * u;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - 0.5).abs() < 4.0 * (1.0 / 12.0 / n as f64).sqrt());
        assert!((var - 1.0 / 12.0).abs() < 2e-3);
    }

    #[test]
    fn distinct_ids_are_uncorrelated() {
        // cross-correlation of paired draws from neighbouring ids within 3 sigma of 0
        let n = 100_000;
        for (ia, ib) in [(0u64, 1u64), (5, 6), (1 << 40, (1 << 40) + 1)] {
            let mut a = RngStream::new(2024, ia);
            let mut b = RngStream::new(2024, ib);
            let mut acc = 0.0;
            for _ in 0..n {
                acc += (a.uniform() - 0.5) * (b.uniform() - 0.5);
            }
            let corr = acc / n as f64 * 12.0;
            assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "ids {ia},{ib}: {corr}");
        }
    }

    #[test]
    fn below_is_in_range_and_roughly_flat() {
        let mut r = RngStream::new(3, 3);
        let mut counts = [0u32; 7];
        for _ in 0..70_000 {
            counts[r.below(7) as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 500.0);
        }
    }

    #[test]
    fn normal_moments() {
        let mut r = RngStream::new(9, 1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.015);
        assert!((var - 1.0).abs() < 0.02);
    }
}
