//! Seed derivation and the portable generator used everywhere randomness
//! appears.
//!
//! All randomness flows through [`ChaCha8Rng`] seeded with
//! `seed_from_u64`, so streams are identical across platforms. Independent
//! sub-streams (per experiment cell, per trial, per sampled support) get
//! their own seed from [`hash64`], which makes results independent of the
//! order in which parallel workers run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer (Steele, Lea and Flood).
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for `(master, a, b)`:
/// `splitmix64(splitmix64(splitmix64(master) ^ a) ^ b)`.
pub fn hash64(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ a) ^ b)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
