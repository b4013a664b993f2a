//! Deterministic random number generation.
//!
//! All sampling in this crate flows through a hand-rolled xoshiro256++
//! generator seeded via SplitMix64. A fixed algorithm (rather than a library
//! default that may change between versions or platforms) keeps every
//! simulation bit-identical for a given seed, which the reproducibility
//! contract of the simulators depends on.
//!
//! Parallel or chunked runs derive one generator per chunk with
//! [`derive_seed`]: `run_seed = mix64(master_seed XOR chunk_index * GOLDEN)`.
//! Concatenating chunk outputs in index order is then bit-identical to a
//! single sequential run over the same chunks.

use crate::math;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; used for seeding and seed derivation.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the generator seed for chunk `index` of a run with `master_seed`.
#[inline]
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed ^ index.wrapping_mul(GOLDEN))
}

/// xoshiro256++ (Blackman & Vigna 2019). 64-bit output, 256-bit state.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        // SplitMix64 expansion of the seed; guarantees a non-zero state.
        let mut z = seed;
        let mut s = [0u64; 4];
        for word in &mut s {
            z = z.wrapping_add(GOLDEN);
            *word = mix64(z);
        }
        Rng { s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1]; safe as an argument to `ln`.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n) by widening multiply (Lemire).
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Exponential with the given rate, by inverse CDF on a 64-bit uniform.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -math::ln(self.uniform_open()) / rate
    }
}
