//! Counter-based random streams.
//!
//! Every random draw in the toolkit is addressed by a `(seed, counters...)`
//! key rather than pulled from a shared generator. A batch element's stream
//! depends only on its key, so batches evaluated concurrently produce the
//! same numbers as a sequential pass.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a child counter into a parent key.
pub fn derive(key: u64, counter: u64) -> u64 {
    splitmix64(key ^ splitmix64(counter.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// A generator positioned at `(key, index)`.
pub fn stream(key: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive(key, index))
}

/// Plain seeded generator for caller-owned sequential streams.
pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, 3).random();
        let b: u64 = stream(7, 3).random();
        let c: u64 = stream(7, 4).random();
        let d: u64 = stream(8, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
