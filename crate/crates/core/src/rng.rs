//! Keyed random streams.
//!
//! Every shot draws from its own generator derived from `(seed, point, shot)`,
//! so results do not depend on the order in which points or shots are
//! evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a list of words into one 64-bit key.
pub fn derive_key(words: &[u64]) -> u64 {
    words.iter().fold(0x5eed_u64, |acc, &w| splitmix(acc ^ splitmix(w)))
}

/// Generator for one shot of one sweep point.
pub fn shot_rng(seed: u64, point: u64, shot: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(&[seed, point, shot]))
}

/// Generator for a named sub-stream, e.g. one RB sequence.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(&[seed, u64::MAX, stream]))
}
