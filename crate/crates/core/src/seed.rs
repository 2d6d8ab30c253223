//! Deterministic seed substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator whose seed is
//! derived from the user seed plus a path of tags (k, restart, trial, ...), so
//! results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `seed`, producing an independent child seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn rng_for(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tags))
}

// Stream tags, kept distinct so no two consumers share a substream.
pub(crate) const TAG_KMEANS: u64 = 0x6b6d;
pub(crate) const TAG_SECOND_KMEANS: u64 = 0x6b32;
pub(crate) const TAG_TRIAL: u64 = 0x7472;
pub(crate) const TAG_GENERATE: u64 = 0x6765;
