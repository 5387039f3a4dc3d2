//! Seeded pseudo-randomness.
//!
//! Every stochastic component in the crate draws from [`SplitMix64`], seeded
//! explicitly by the caller. There is no global RNG state; reproducing a run
//! means passing the same seed. Independent streams (per trial, per sweep
//! point) are derived with [`derive_seed`].

use alloc::vec::Vec;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 generator. Small state, full 2^64 period, good enough
/// statistical quality for Monte Carlo trial generation.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    // spare half of a Box-Muller pair
    cached_normal: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 {
            state: seed,
            cached_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`; safe as a logarithm argument.
    #[inline]
    fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform integer in `[0, bound)` via rejection sampling.
    pub fn gen_range(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    /// Standard normal via Box-Muller; pairs are cached so consecutive
    /// draws cost one transform each on average.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(v) = self.cached_normal.take() {
            return v;
        }
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.cached_normal = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    /// Rademacher draw: -1.0 or +1.0 with equal probability.
    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `k` distinct indices sampled uniformly from `0..n` (partial
    /// Fisher-Yates), returned in selection order.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.gen_range((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    /// A uniformly random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in 0..n.saturating_sub(1) {
            let j = i + self.gen_range((n - i) as u64) as usize;
            p.swap(i, j);
        }
        p
    }

    /// Forks an independent child generator.
    pub fn split(&mut self) -> SplitMix64 {
        SplitMix64::new(self.next_u64())
    }
}

/// Derives the seed for stream `stream`, element `index`, from a master
/// seed: two rounds of the SplitMix64 finalizer over the mixed-in labels.
/// Used for trial-level parallelism so that every trial's randomness is a
/// pure function of `(master, stream, index)`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    mix64(
        mix64(master ^ mix64(stream.wrapping_mul(GAMMA)))
            ^ mix64(index.wrapping_mul(GAMMA) ^ 0xD1B5_4A32_D192_ED03),
    )
}
