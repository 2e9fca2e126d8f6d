//! Counter-based random stream derivation.
//!
//! Every random stream is derived from the master seed and a tuple of
//! integer tags (sweep point, realization, purpose, ...). Streams never
//! depend on execution order, so worker count does not change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream purposes. Values are part of the reproducibility contract.
pub mod purpose {
    pub const PLACEMENT: u64 = 1;
    pub const CACHES: u64 = 2;
    pub const REQUESTS: u64 = 3;
    pub const D2D_CHANNEL: u64 = 4;
    pub const BS_CHANNEL: u64 = 5;
    pub const SCHEDULING: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `seed`. Order of tags matters.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(seed: u64, tags: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, tags))
}

/// Stable 64-bit tag for an `f64` coordinate.
pub fn f64_tag(x: f64) -> u64 {
    x.to_bits()
}
