//! Seed derivation and per-index random substreams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`). A
//! generator is keyed with `ChaCha8Rng::seed_from_u64(seed)` (the key is
//! expanded from the 64-bit seed with PCG32, as documented by `rand_core`)
//! and then positioned on a 64-bit stream with `set_stream`. Child seeds are
//! derived with the SplitMix64 finaliser, so any `(seed, stream)` pair maps to
//! the same sequence on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed for `label` under `seed`.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    mix64(mix64(seed) ^ label.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Derives a child seed from a textual label.
pub fn derive_named(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label bytes
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive_seed(seed, h)
}

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
