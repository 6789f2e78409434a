//! Seed derivation for reproducible parallel generation.
//!
//! Every image gets its own 64-bit seed derived from a master seed and the
//! image index, and every stochastic stage of rendering draws from its own
//! ChaCha stream keyed by that seed. No RNG state is shared between images.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a bijection on `u64`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of item `index` under `master`. Injective in `index` for a fixed
/// master, since it is a composition of bijections.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(splitmix64(index)))
}

/// Independent sub-streams used while rendering one image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Label = 0,
    Curve = 1,
    Rotation = 2,
    EdgeNoise = 3,
}

pub fn stage_rng(seed: u64, stage: Stage) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}
