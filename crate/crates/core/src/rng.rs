//! Seed derivation. Every randomized step draws from its own stream derived
//! from a master seed plus a path of integer tags, so adding or reordering
//! work never perturbs an unrelated stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

// Purpose tags used by the harness and data generation.
pub const PURPOSE_FOLDS: u64 = 1;
pub const PURPOSE_SYNTHETIC: u64 = 2;
pub const PURPOSE_CAL_SPLIT: u64 = 3;
pub const PURPOSE_FULL_MODEL: u64 = 4;
pub const PURPOSE_CAL_MODEL: u64 = 5;
pub const PURPOSE_DG: u64 = 6;
pub const PURPOSE_SUBSAMPLE: u64 = 7;
pub const PURPOSE_SPLIT: u64 = 8;
pub const PURPOSE_MODEL: u64 = 9;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix `tags` into `seed`, yielding an independent child seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(seed: u64, tags: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}
