//! Seed derivation. Every random draw in the toolkit comes from a ChaCha8 stream whose seed is
//! derived from a root seed and a path of integer keys (clip index, frame index, purpose, ...).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `keys` into `root`. Different key paths give unrelated seeds; the empty path gives
/// a seed that differs from every non-empty one.
pub fn derive_seed(root: u64, keys: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ 0x6676_646c_656e_7300);
    for (depth, &k) in keys.iter().enumerate() {
        h = splitmix64(h ^ splitmix64(k.wrapping_add((depth as u64 + 1) << 56)));
    }
    h
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived(root: u64, keys: &[u64]) -> Rng {
    seeded(derive_seed(root, keys))
}
