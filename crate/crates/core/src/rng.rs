//! Seeded, stream-separated random generators. Every stochastic component
//! derives its generator from `(seed, stream)` so runs are reproducible and
//! components do not perturb each other's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_SCENE: u64 = 0x5343_454e;
pub const STREAM_GP: u64 = 0x4750_4e5a;
pub const STREAM_HOLES: u64 = 0x484f_4c45;
pub const STREAM_DETECT: u64 = 0x4445_5443;
pub const STREAM_SLIP: u64 = 0x534c_4950;
pub const STREAM_LINK: u64 = 0x4c49_4e4b;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed ^ mix(stream)))
}

pub fn stream_rng2(seed: u64, stream: u64, sub: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(seed ^ mix(stream)) ^ sub))
}
