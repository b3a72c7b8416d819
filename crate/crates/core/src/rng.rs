//! Seeded randomness.
//!
//! Every random draw in the crate comes from a ChaCha8 generator seeded with
//! the user's seed. Independent consumers read independent ChaCha streams of
//! that seed, so adding draws in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Training-row subsampling.
pub const STREAM_SUBSAMPLE: u64 = 1;
/// Train/held-out split.
pub const STREAM_SPLIT: u64 = 2;
/// Member sampling for disentangling, plus the stage index.
pub const STREAM_DISENTANGLE: u64 = 0x100;
/// k-means++ seeding, plus the stage index.
pub const STREAM_KMEANS: u64 = 0x200;

pub fn stream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
