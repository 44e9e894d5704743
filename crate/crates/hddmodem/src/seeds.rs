//! Seed derivation for the simulation's independent noise stages.
//!
//! Every stochastic stage derives its own stream from a master seed and a
//! fixed stage tag, so repeated runs are reproducible and stages stay
//! decorrelated.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Mix a master seed with a stage tag (splitmix64 finalizer).
pub fn derive(master: u64, stage: u64) -> u64 {
    let mut z = master ^ stage.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn rng(master: u64, stage: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stage))
}
