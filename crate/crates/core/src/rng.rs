//! Seeded random streams.
//!
//! Every stochastic routine draws from ChaCha8 keyed by a user seed, with a
//! 64-bit stream id selecting an independent sequence. Normal deviates come
//! from `rand_distr::StandardNormal` (ziggurat) and are scaled afterwards, so
//! a run at `c * beta` is the run at `beta` times `c`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in run metadata for the deviate generator.
pub const GENERATOR_ID: &str = "chacha8-stream/ziggurat-standard-normal/v1";

pub type Rng = ChaCha8Rng;

/// Independent stream `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for sub-task `index` of a task seeded with `seed` (splitmix64 step).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
