//! Seed derivation. Every random stream in a run is keyed by the root seed,
//! a purpose tag and up to two counters, so any stream can be recreated in
//! isolation (e.g. when resuming from a checkpoint).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Split = 2,
    Episodes = 3,
    Actions = 4,
    Shuffle = 5,
    Eval = 6,
}

pub fn derive_rng(root: u64, stream: Stream, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&root.to_le_bytes());
    key[8..16].copy_from_slice(&(stream as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
