//! Seeded randomness.
//!
//! Every stochastic operation takes an explicit `u64` seed and builds a
//! [`SimRng`] from it. `SimRng` is ChaCha with 8 rounds (`rand_chacha`),
//! seeded through `SeedableRng::seed_from_u64` (which expands the `u64` with
//! PCG32). Streams are therefore stable for a given crate version.
//!
//! Sub-seeds (per replicate, per grid point, per restart) are derived with
//! [`derive_seed`], a SplitMix64 finalizer applied to the running state after
//! absorbing each component.

use rand::SeedableRng;

pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes `base` with each component in turn.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}
