//! Seed derivation. All randomness in the crate flows from one root seed;
//! each consumer gets `sub-seed = first 8 bytes (LE) of SHA-256(root_le ‖ label)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Name of the generator recorded in output metadata.
pub const GENERATOR: &str = "ChaCha8Rng seeded from u64; Poisson via rand_distr 0.5 (Knuth product method for mean < 12, transformed rejection above)";

pub fn derive_seed(root: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
