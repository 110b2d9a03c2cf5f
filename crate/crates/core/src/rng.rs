//! Seed derivation.
//!
//! Every stage gets its own ChaCha stream derived from the user seed and a
//! fixed stream tag, so adding a stage never perturbs another one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

pub const STREAM_INIT: u64 = 0x1001;
pub const STREAM_LAYOUT: u64 = 0x1002;
pub const STREAM_SPLIT: u64 = 0x1003;
pub const STREAM_SEARCH: u64 = 0x1004;
pub const STREAM_STRESS: u64 = 0x1005;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent seed for `stream` from `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream))
}

pub fn stage_rng(seed: u64, stream: u64) -> StageRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}
