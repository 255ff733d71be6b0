//! Seeded randomness.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] seeded from a `u64`.
//! ChaCha8 output is specified independently of platform and word size, so a
//! given seed yields the same trace everywhere. Per-run seeds are derived from
//! the master seed with [`mix_seed`], a chain of SplitMix64 finalizers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Master seed used when none is configured.
pub const DEFAULT_MASTER_SEED: u64 = 42;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 output function (Steele, Lea & Flood).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for run `run` of stream `stream` under `master`.
///
/// `seed = sm(sm(sm(master) ^ run) ^ stream)` where `sm` is [`splitmix64`].
pub fn mix_seed(master: u64, run: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ run) ^ stream)
}

/// 64-bit FNV-1a hash of a stream name; stable across builds.
pub fn stream_id(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn unit(rng: &mut SeededRng) -> f64 {
    rng.random::<f64>()
}
