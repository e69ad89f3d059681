//! Seeded randomness.
//!
//! All sampling uses ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`. Per-document streams use the seed XORed
//! with the XXH64 hash (seed 0) of the document id, so results do not
//! depend on which worker handles which document.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxhash_rust::xxh64::xxh64;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, key: &str) -> Rng {
    seeded(seed ^ xxh64(key.as_bytes(), 0))
}
