//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`), a counter-based
//! generator with 2^64 independent streams per key. A run's master seed is
//! split into per-dataset, per-step keys with [`derive_seed`]; inside a step
//! each unit of work (one Monte Carlo draw, one synthetic series) owns its own
//! stream, so results never depend on scheduling or batching.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent 64-bit seed for `(master, label, step)`.
///
/// First eight bytes (little-endian) of
/// `SHA-256("posterior-bench/seed/v1" || master_le || len(label)_le || label || step)`.
/// Hash-derived seeds mean adding or renaming one dataset never perturbs
/// another dataset's streams.
pub fn derive_seed(master: u64, label: &str, step: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(b"posterior-bench/seed/v1");
    h.update(master.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(step.as_bytes());
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}
