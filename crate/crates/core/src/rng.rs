//! Seeding. Every stochastic routine takes an explicit generator; sweeps
//! derive independent child seeds from one 64-bit root seed.
//!
//! Child seeds are computed as `splitmix64(root ^ splitmix64(tag))`, applied
//! once per path component, so `derive(derive(s, a), b)` is a pure function
//! of `(s, a, b)` and sibling streams never share a generator.

use rand::SeedableRng;

/// Generator used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed for stream `tag` under `seed`.
pub fn derive(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

/// Child seed keyed by a string label, e.g. `"valid"` or `"train"`.
pub fn derive_str(seed: u64, label: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive(seed, h)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
