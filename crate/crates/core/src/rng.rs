//! Named random sub-streams.
//!
//! Every random choice in the crate draws from a ChaCha stream keyed by the
//! user seed, a stream name and a list of indices (repetition, cell, class).
//! Streams never depend on evaluation order, so parallel and sequential runs
//! produce the same bytes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, name: &str, indices: &[u64]) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((name.len() as u64).to_le_bytes());
    hasher.update(name.as_bytes());
    for index in indices {
        hasher.update(index.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(key)
}

/// Derives a child seed, for APIs that take a plain `u64`.
pub fn derive_seed(seed: u64, name: &str, indices: &[u64]) -> u64 {
    use rand::RngCore;
    stream(seed, name, indices).next_u64()
}
