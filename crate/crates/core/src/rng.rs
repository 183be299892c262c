//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit [`RandomStream`]. Independent
//! sub-streams are derived from a master seed, a label and a list of indices
//! (grid cell, parameter point, trial) by chaining the SplitMix64 finalizer,
//! so adding a grid cell never perturbs the randomness of another one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RandomStream = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a of a label.
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Mixes the master seed with a label and a path of indices.
pub fn derive_seed(master: u64, label: &str, indices: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ label_hash(label));
    for &i in indices {
        h = splitmix64(h ^ splitmix64(i));
    }
    h
}

pub fn stream_from_seed(seed: u64) -> RandomStream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sub_stream(master: u64, label: &str, indices: &[u64]) -> RandomStream {
    stream_from_seed(derive_seed(master, label, indices))
}
