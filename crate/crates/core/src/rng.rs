//! Counter-style RNG streams.
//!
//! Every random draw in the filter and simulator comes from a stream keyed by
//! a base seed and a tuple such as `(trial, time, component, label, purpose)`.
//! Streams do not depend on evaluation order, so serial and parallel runs
//! produce identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream purposes.
pub mod purpose {
    pub const PROPAGATE: u64 = 1;
    pub const RESAMPLE: u64 = 2;
    pub const MERGE: u64 = 3;
    pub const BIRTH: u64 = 4;
    pub const FRAME: u64 = 5;
    pub const TRIAL: u64 = 6;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a seed and key tuple into one 64-bit value.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &k in keys {
        h = splitmix64(h ^ splitmix64(k.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

/// A fresh generator for the stream `(seed, keys...)`.
pub fn stream(seed: u64, keys: &[u64]) -> StreamRng {
    let mut bytes = [0u8; 32];
    let mut h = derive_seed(seed, keys);
    for chunk in bytes.chunks_mut(8) {
        h = splitmix64(h);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, &[1, 2, 3]).random();
        let b: u64 = stream(7, &[1, 2, 3]).random();
        let c: u64 = stream(7, &[1, 2, 4]).random();
        let d: u64 = stream(8, &[1, 2, 3]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_ne!(derive_seed(0, &[1, 2]), derive_seed(0, &[2, 1]));
    }
}
