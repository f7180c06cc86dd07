//! Per-stage seed derivation.
//!
//! Every random choice in a pipeline run flows from one master seed. Each stage draws from
//! its own stream, `SHA-256(master as little-endian u64 || stage name)` truncated to the
//! first eight bytes, so adding randomness to one stage never shifts another.
//!
//! Stage names used by the pipeline: `sample`, `select`, `materialize`, `harden`,
//! `synthpop`, `run/<i>` for repeated runs in reports, and `guess` for simulated attackers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive(master: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stage_rng(master: u64, stage: &str) -> ChaCha8Rng {
    rng(derive(master, stage))
}
