//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha8 stream derived from
//! a user seed, so results are bit-reproducible and independent of the order
//! in which components are run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream identifiers for the sub-generators of one simulation.
pub mod stream {
    pub const CASCADE: u64 = 1;
    pub const TELEGRAPH: u64 = 2;
    pub const BACKGROUND: u64 = 3;
    pub const ROUTING: u64 = 4;
    pub const DETECTOR: u64 = 5;
    pub const MICHELSON: u64 = 6;
    pub const LOCK: u64 = 7;
}

/// Generator for `stream` under `seed`.
pub fn seeded(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a parent seed with an index (shard, phase step, sweep row).
///
/// SplitMix64 finalizer; distinct indices give decorrelated child seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
