//! Seeded generator streams.
//!
//! Every random draw in the crate goes through [`stream`], which mixes a user
//! seed with a domain tag so that independent consumers (recurrent weights,
//! input weights, corruption of image 17, ...) never share a sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator identifier recorded in model files. Changing the generator or the
/// stream derivation must change this string.
pub const GENERATOR_ID: &str = "chacha8/splitmix64-streams/v1";

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ mix64(tag)) ^ index)
}

pub fn stream(seed: u64, tag: u64, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, index))
}

pub(crate) mod tags {
    pub const RECURRENT: u64 = 0x5245_4355_5252;
    pub const INPUT: u64 = 0x0049_4E50_5554;
    pub const SPECTRAL: u64 = 0x5350_4543;
    pub const CORRUPT: u64 = 0x434F_5252;
}
