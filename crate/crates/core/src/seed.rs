//! Seeding helpers. Every random stream in the crate comes from
//! [`rng_from_seed`] so results depend only on the recorded seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used everywhere, recorded in instance files and run logs.
pub type Rng = ChaCha8Rng;

/// Identifier of the PRNG algorithm and the sampling library version.
pub const RNG_ID: &str = "chacha8/rand-0.9";

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent seed for `key` under `master` by hashing both.
/// Stable across platforms and releases.
pub fn derive_seed(master: u64, key: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
