//! Seeding helpers shared by every simulation.
//!
//! All randomness flows from a single 64-bit seed. Independent streams
//! (trials, sweep points, cipher keys) are derived by adding a stream index
//! to the base seed and passing the sum through the SplitMix64 finalizer.
//! The generator itself is xoshiro256++, seeded through SplitMix64 as its
//! authors recommend.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SimRng = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function applied to `x + gamma`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base.wrapping_add(stream))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Stream index for a (sweep point, trial) pair.
pub fn point_stream(point: u64, trial: u64) -> u64 {
    (point << 32) | (trial & 0xffff_ffff)
}
