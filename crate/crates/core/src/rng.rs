//! Counter-based splittable generator: output i of stream s under seed q is
//! a pure function of (q, s, i), so replicas are independent, reproducible
//! and resumable from a two-word saved state.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_MIX: u64 = 0xD2B7_4407_B1CE_6E93;

/// Source of uniform draws in [0,1). Simulation code takes this trait so
/// tests can inject fixed draws.
pub trait RandomSource {
    fn next_f64(&mut self) -> f64;
}

/// SplitMix64 finalizer: a bijective 64-bit mix.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based generator keyed by (seed, stream-id).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(mix64(seed.wrapping_add(GOLDEN)) ^ stream.wrapping_mul(STREAM_MIX));
        CounterRng { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter = self.counter.wrapping_add(1);
        v
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }
}

impl RandomSource for CounterRng {
    #[inline]
    fn next_f64(&mut self) -> f64 {
        // 53 high bits -> uniform on [0,1).
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Fixed draw sequence for tests.
pub struct FixedDraws {
    draws: Vec<f64>,
    pos: usize,
}

impl FixedDraws {
    pub fn new(draws: Vec<f64>) -> Self {
        FixedDraws { draws, pos: 0 }
    }
}

impl RandomSource for FixedDraws {
    fn next_f64(&mut self) -> f64 {
        let v = self.draws[self.pos % self.draws.len()];
        self.pos += 1;
        v
    }
}
