//! Per-trajectory Wiener increments.
//!
//! Trajectory `i` owns an independent ChaCha8 stream seeded from
//! `(base_seed, i)` only, and draws its increments in a fixed order (fine
//! step, then channel x before z). A trajectory is therefore reproducible
//! on its own and independent of how an ensemble is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// SplitMix64 finalizer over `(base_seed, index)`.
pub fn trajectory_seed(base_seed: u64, index: u64) -> u64 {
    let mut z = base_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    seed: u64,
}

impl NoiseStream {
    pub fn for_trajectory(base_seed: u64, index: usize) -> Self {
        Self::from_seed(trajectory_seed(base_seed, index as u64))
    }

    pub fn from_seed(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Independent `(dW_x, dW_z)` with variance `h` each.
    pub fn increments(&mut self, h: f64) -> (f64, f64) {
        let s = h.sqrt();
        let a = self.standard_normal();
        let b = self.standard_normal();
        (s * a, s * b)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}
