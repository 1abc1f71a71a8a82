//! Per-run random streams.
//!
//! Each run gets its own ChaCha8 stream keyed by a 64-bit seed derived from
//! `(master_seed, run_id)` with the SplitMix64 finalizer. The derivation is
//! injective in `run_id` for a fixed master seed, so no two runs of an
//! ensemble share a stream, and a run's draws do not depend on which thread
//! executes it or in what order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for run `run_id` of an ensemble with master seed `master`.
pub fn derive_run_seed(master: u64, run_id: u64) -> u64 {
    // affine in run_id with an odd multiplier, then a bijective mix
    splitmix64_mix(
        splitmix64_mix(master).wrapping_add(run_id.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
    )
}

/// Deterministic random stream for one trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform variate in the open interval `(0, 1)` with 53 bits of
    /// resolution.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}
