//! Seeded, splittable random streams.
//!
//! Every sampler draws from ChaCha20 keyed by a 64-bit seed. Independent
//! workers use disjoint ChaCha streams, so results do not depend on how work
//! is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator identifier recorded in every manifest.
pub const PRNG_VERSION: &str = "chacha20(rand_chacha 0.9, seed_from_u64, set_stream)/v1";

pub type StreamRng = ChaCha20Rng;

/// Stream purposes, the top byte of a stream id.
pub mod purpose {
    pub const CV_FOLDS: u8 = 1;
    pub const BASE_TABLES: u8 = 2;
    pub const SIMPSON: u8 = 3;
    pub const NON_SIMPSON: u8 = 4;
    pub const BATCH: u8 = 5;
}

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs a (purpose, group, item) triple into a stream id.
///
/// `purpose` selects the experiment role (e.g. Simpson vs. unconditioned
/// draws), `group` the sample-size index and `item` the dataset index.
pub fn stream_id(purpose: u8, group: u32, item: u32) -> u64 {
    (u64::from(purpose) << 56) | (u64::from(group) << 32) | u64::from(item)
}
