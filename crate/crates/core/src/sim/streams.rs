//! Independent named random streams derived from one seed.
//!
//! Every quantity that should stay fixed when an unrelated parameter
//! changes (vehicle trajectories when the threshold changes, for example)
//! draws from its own stream, so sweeps compare cells under common random
//! numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(seed: u64, tag: &str, a: u64, b: u64) -> u64 {
    let d = Sha256::new()
        .chain_update(b"vanet-trs/sim")
        .chain_update(seed.to_be_bytes())
        .chain_update((tag.len() as u32).to_be_bytes())
        .chain_update(tag.as_bytes())
        .chain_update(a.to_be_bytes())
        .chain_update(b.to_be_bytes())
        .finalize();
    u64::from_be_bytes(d[..8].try_into().unwrap())
}

pub fn stream(seed: u64, tag: &str, a: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive_seed(seed, tag, a, 0))
}

/// Uniform in `[0, 1)`.
pub fn unit(seed: u64, tag: &str, a: u64, b: u64) -> f64 {
    (derive_seed(seed, tag, a, b) >> 11) as f64 / (1u64 << 53) as f64
}
