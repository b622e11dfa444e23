//! Seeded, splittable random streams.
//!
//! Every component derives its own ChaCha stream from `(seed, label)`, so the
//! order in which components run (or whether they run in parallel) never
//! changes the numbers any one of them sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Returns the stream for `label` under the master `seed`.
pub fn stream(seed: u64, label: &str) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Stream for the `index`-th member of a family of streams (trials, workers).
pub fn indexed_stream(seed: u64, label: &str, index: u64) -> StreamRng {
    stream(seed, &format!("{label}#{index}"))
}
