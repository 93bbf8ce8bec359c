//! Seed derivation for independent, order-free random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded by
//! [`stream`], keyed on the experiment seed plus a path of integers
//! (purpose tag, instance index, epoch, ...). Two streams with different
//! paths are statistically independent, and regenerating any single stream
//! never depends on how many draws other streams consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags mixed into stream paths.
pub mod tag {
    pub const DISAMB_INIT: u64 = 1;
    pub const AUX_INIT: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const DISAMB_VIEWS: u64 = 4;
    pub const AUX_VIEWS: u64 = 5;
    pub const CANDIDATES: u64 = 6;
    pub const SCORER_INIT: u64 = 7;
    pub const SCORER_SHUFFLE: u64 = 8;
    pub const SPLIT: u64 = 9;
    pub const SYNTHETIC: u64 = 10;
    pub const LABEL_NOISE: u64 = 11;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
