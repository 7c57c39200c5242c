//! Named-stream RNG derivation.
//!
//! All randomness in the crate flows from a single 64-bit master seed. A
//! stream is identified by a purpose string; the stream seed is the SHA-256
//! digest of the master seed concatenated with the purpose. Adding new
//! experiments therefore never perturbs the draws of existing ones, and any
//! sub-computation (a replica, a coupled half, a path batch) can be replayed
//! in isolation.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;
use sha2::{Digest, Sha256};

/// Deterministic RNG for `purpose` under `master`.
pub fn stream(master: u64, purpose: &str) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(purpose.as_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(seed)
}

/// Indexed variant for replica-style fan-out.
pub fn substream(master: u64, purpose: &str, index: u64) -> ChaCha12Rng {
    stream(master, &format!("{purpose}/{index}"))
}

/// Collapse a (master, purpose) pair back to a 64-bit seed, for records that
/// store a single integer (e.g. instance headers).
pub fn derive_seed(master: u64, purpose: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(purpose.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
