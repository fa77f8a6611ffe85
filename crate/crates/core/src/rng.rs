//! Seeded random streams.
//!
//! Every random decision in the crate comes from a [`ChaCha8Rng`]. A stream is
//! never shared between purposes: each consumer derives its own child seed
//! from `(parent seed, purpose label, index)` with [`derive_seed`], so adding
//! a draw in one place never shifts the numbers seen anywhere else, and runs
//! executed on different worker threads see exactly the same streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed, a purpose label and an index.
///
/// The label is folded with FNV-1a and the three parts are mixed through
/// SplitMix64 finalizers. The mapping is fixed; changing it changes every
/// stored experiment.
pub fn derive_seed(parent: u64, label: &str, index: u64) -> u64 {
    let label_hash = label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME));
    let mut h = splitmix64(parent);
    h = splitmix64(h ^ label_hash);
    splitmix64(h ^ index)
}

/// Builds a generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Shorthand for `rng_from_seed(derive_seed(parent, label, index))`.
pub fn child_rng(parent: u64, label: &str, index: u64) -> Rng {
    rng_from_seed(derive_seed(parent, label, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn derivation_is_stable_and_separates_inputs() {
        let a = derive_seed(7, "order", 0);
        assert_eq!(a, derive_seed(7, "order", 0));
        assert_ne!(a, derive_seed(7, "order", 1));
        assert_ne!(a, derive_seed(7, "init", 0));
        assert_ne!(a, derive_seed(8, "order", 0));
    }

    #[test]
    fn child_streams_replay() {
        let mut x = child_rng(1, "x", 3);
        let mut y = child_rng(1, "x", 3);
        for _ in 0..100 {
            assert_eq!(x.gen::<u64>(), y.gen::<u64>());
        }
    }
}
