//! Seed derivation. Every random stage draws from its own ChaCha stream whose
//! seed is a stable hash of the master seed and a stage label, so results do
//! not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a child seed from `master` and a list of labels.
pub fn derive(master: u64, labels: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for l in labels {
        h.update((l.len() as u64).to_le_bytes());
        h.update(l.as_bytes());
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().unwrap())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Keyed 64-bit digest of `parts`, used for opaque names and pseudo-labels.
pub fn keyed_digest(key: u64, parts: &[&str]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"phc-keyed-v1");
    h.update(key.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    h.finalize().into()
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T, R: rand::Rng>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}
