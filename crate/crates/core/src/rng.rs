//! Counter-based seed derivation.
//!
//! Every random quantity in the crate is a pure function of a master seed and
//! an integer key (a realization index, a walker chunk, a lattice vertex).
//! Keys go through the SplitMix64 finalizer and select a ChaCha stream, so two
//! boxes of different radius draw identical variates on their overlap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(master, index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master ^ GOLDEN).wrapping_add(index.wrapping_mul(GOLDEN)))
}

/// Stream key for a lattice vertex, independent of any box enumeration.
pub fn vertex_key(coords: &[i64]) -> u64 {
    coords.iter().fold(mix64(coords.len() as u64), |h, &c| mix64(h.wrapping_add(GOLDEN) ^ (c as u64)))
}

/// Generator for vertex-local draws.
pub fn vertex_rng(seed: u64, coords: &[i64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(vertex_key(coords));
    rng
}

/// Generator for an indexed task (realization, walker chunk, bootstrap).
pub fn task_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}
