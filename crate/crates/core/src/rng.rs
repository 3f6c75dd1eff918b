//! Deterministic seeded randomness.
//!
//! The sampler contract is replayability: the same (seed, mechanism, input)
//! must produce the same output on every run and every platform. We fix
//! SplitMix64 as the generator and map each 64-bit draw to the exact
//! rational k/2^64 in [0,1).

use num_bigint::BigInt;

use crate::rational::Rational;

/// SplitMix64 (Steele, Lea & Flood 2014; the reference `splitmix64` stream).
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform exact rational in [0,1) at 64-bit resolution.
    pub fn next_unit(&mut self) -> Rational {
        let k = self.next_u64();
        Rational::from_big(BigInt::from(k), BigInt::from(1u128 << 64))
    }

    /// Uniform index in 0..bound (modulo bias is irrelevant at test scales).
    pub fn next_index(&mut self, bound: usize) -> usize {
        assert!(bound > 0);
        (self.next_u64() % bound as u64) as usize
    }
}
