//! Seeded generators and the seed-derivation function used by every parallel
//! Monte-Carlo loop.
//!
//! A child seed is computed by folding each component into a SplitMix64 state:
//! `h = mix(base); for c in components { h = mix(h ^ c) }`. Strings are first
//! reduced with 64-bit FNV-1a and reals contribute their IEEE-754 bit pattern.
//! The function is part of the output format: changing it changes every
//! published result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type DpRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> DpRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn derive_seed(base: u64, components: &[u64]) -> u64 {
    components.iter().fold(mix64(base), |h, &c| mix64(h ^ c))
}

/// Seed for one replication of one experiment cell.
pub fn cell_seed(base: u64, command: &str, m: usize, epsilon: f64, n: usize, replication: usize) -> u64 {
    derive_seed(
        base,
        &[
            fnv1a(command),
            m as u64,
            epsilon.to_bits(),
            n as u64,
            replication as u64,
        ],
    )
}
