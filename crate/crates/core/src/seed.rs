//! Deterministic child-seed derivation.
//!
//! Every random stream in an experiment is keyed by the master seed plus a
//! label and a path of indices, hashed with SHA-256. Changing one index only
//! changes the stream it names.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type ExperimentRng = ChaCha20Rng;

pub fn derive_seed(master: u64, label: &str, path: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    for p in path {
        hasher.update(p.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}

pub fn rng_from_seed(seed: u64) -> ExperimentRng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn child_rng(master: u64, label: &str, path: &[u64]) -> ExperimentRng {
    rng_from_seed(derive_seed(master, label, path))
}
