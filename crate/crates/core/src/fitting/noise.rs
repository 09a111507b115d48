//! Reproducible Gaussian noise.
//!
//! The stream is ChaCha8 seeded with `seed_from_u64(seed)`. Each normal
//! variate consumes two 64-bit outputs `a`, `b` in order and is
//! `sqrt(−2 ln u1) · cos(2π u2)` with `u1 = ((a >> 11) + 1) · 2⁻⁵³` and
//! `u2 = (b >> 11) · 2⁻⁵³`. The sine partner is discarded.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SCALE: f64 = 1.0 / (1u64 << 53) as f64;

pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn next_standard(&mut self) -> f64 {
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * SCALE;
        let u2 = (self.rng.next_u64() >> 11) as f64 * SCALE;
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
