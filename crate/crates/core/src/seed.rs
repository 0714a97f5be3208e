//! Stable sub-seed derivation.
//!
//! Seeds are derived from SHA-256 over a tagged, length-prefixed encoding so
//! the mapping never changes across platforms or library versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The random stream used everywhere in the crate.
pub type JiveRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> JiveRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 64-bit seed from a master seed, a label and a sequence of indices.
pub fn derive_seed(master: u64, label: &str, indices: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    for i in indices {
        h.update(i.to_le_bytes());
    }
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
