//! Seed derivation and RNG construction.
//!
//! Every random stream in the crate is a `ChaCha8Rng` keyed by a seed derived
//! from a master seed and a path of stream labels. The derivation is a
//! splitmix64 chain, so `derive_seed(m, &[a, b])` is stable across platforms
//! and releases. Experiments record only the master seed; all per-round and
//! per-purpose streams are reproducible from it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer (Steele, Lea, Flood 2014).
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a path of stream labels.
///
/// Each label is folded through splitmix64, so distinct paths give
/// independent-looking seeds and the derivation is order-sensitive.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &label in path {
        state = splitmix64(state ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    state
}

/// Build the crate-standard RNG from a seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_is_deterministic_and_path_sensitive() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
    }

    #[test]
    fn rng_streams_reproduce() {
        use rand::Rng;
        let mut a = rng_from(derive_seed(42, &[3]));
        let mut b = rng_from(derive_seed(42, &[3]));
        for _ in 0..16 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }
}
