//! Stable seed derivation.
//!
//! All randomness in a run flows from one root seed. Each consumer gets its own
//! stream keyed by `(stage, a, b)` so that re-running a single stage (or a
//! single frame) reproduces exactly the same draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a sub-seed from a root seed, a stage tag and two indices.
pub fn derive_seed(root: u64, stage: &str, a: u64, b: u64) -> u64 {
    let mut h = FNV_OFFSET;
    for byte in stage.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(FNV_PRIME);
    }
    let mut z = splitmix64(root ^ h);
    z = splitmix64(z ^ a);
    splitmix64(z ^ b.rotate_left(32))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
