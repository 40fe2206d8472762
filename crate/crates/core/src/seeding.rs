//! Named random substreams.
//!
//! Every experiment run is identified by `(master_seed, repeat_index)`. Each
//! consumer of randomness (context generation, reward noise, the policy,
//! each tuner layer, baselines) gets its own generator whose 32-byte seed is
//!
//! ```text
//! SHA-256( master_seed as u64 LE || repeat_index as u64 LE || name as UTF-8 )
//! ```
//!
//! fed to `ChaCha8Rng::from_seed`. Adding a new consumer therefore never
//! shifts the draws seen by the existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

pub const ENV: &str = "env";
pub const CONTEXT: &str = "context";
pub const REWARD: &str = "reward";
pub const POLICY: &str = "policy";
pub const WARMUP: &str = "warmup";
pub const BASELINE: &str = "baseline";

pub fn derive_seed(master_seed: u64, repeat_index: u64, name: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(repeat_index.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    seed
}

pub fn stream(master_seed: u64, repeat_index: u64, name: &str) -> Stream {
    ChaCha8Rng::from_seed(derive_seed(master_seed, repeat_index, name))
}

/// Integer seed for APIs that take a `u64` (the first eight digest bytes).
pub fn derive_u64(master_seed: u64, repeat_index: u64, name: &str) -> u64 {
    let s = derive_seed(master_seed, repeat_index, name);
    u64::from_le_bytes(s[..8].try_into().expect("8 bytes"))
}

pub fn layer_name(layer: usize) -> String {
    format!("layer-{layer}")
}
