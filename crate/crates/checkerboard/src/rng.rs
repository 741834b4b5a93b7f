//! Counter-based randomness: every Bernoulli choice is a pure function of
//! (seed, sample index, vertex). No generator state is carried between
//! vertices, so results cannot depend on evaluation order or thread count.

use crate::lattice::LatticeVertex;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer; good enough avalanche for decorrelating lattice
/// coordinates from seeds.
#[inline]
pub(crate) fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for one Monte Carlo sample.
#[inline]
pub(crate) fn sample_seed(seed: u64, sample_index: u64) -> u64 {
    mix(seed ^ sample_index.wrapping_mul(GAMMA).wrapping_add(GAMMA))
}

/// Uniform word attached to a vertex, keyed by doubled coordinates.
#[inline]
pub(crate) fn vertex_word(stream: u64, du: i64, dv: i64) -> u64 {
    let a = mix(stream ^ (du as u64).wrapping_mul(0xA24B_AED4_963E_E407));
    mix(a ^ (dv as u64).wrapping_mul(0x9FB2_1C65_1E98_DF25))
}

#[inline]
pub(crate) fn vertex_word_at(stream: u64, vertex: &LatticeVertex) -> u64 {
    vertex_word(stream, vertex.u().doubled(), vertex.v().doubled())
}

/// Threshold so that `word < threshold` happens with probability p up to
/// 2^-64. Exact at p = 0 and p = 1.
#[inline]
pub(crate) fn bernoulli_threshold(p_num: &num_bigint::BigUint, p_den: &num_bigint::BigUint) -> u128 {
    use num_traits::ToPrimitive;
    let scaled = (p_num << 64u32) / p_den;
    scaled.to_u128().unwrap_or(u128::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    #[test]
    fn pure_function_of_inputs() {
        let a = vertex_word(sample_seed(7, 3), 5, -9);
        let b = vertex_word(sample_seed(7, 3), 5, -9);
        assert_eq!(a, b);
        assert_ne!(a, vertex_word(sample_seed(7, 4), 5, -9));
        assert_ne!(a, vertex_word(sample_seed(8, 3), 5, -9));
        assert_ne!(a, vertex_word(sample_seed(7, 3), 7, -9));
    }

    #[test]
    fn degenerate_thresholds() {
        let zero = bernoulli_threshold(&BigUint::from(0u32), &BigUint::from(1u32));
        let one = bernoulli_threshold(&BigUint::from(1u32), &BigUint::from(1u32));
        assert_eq!(zero, 0);
        assert_eq!(one, 1u128 << 64);
        // every word is >= 0 and < 2^64, so p=0 never fires and p=1 always does
        assert!(((u64::MAX as u128) < one) && (0u128 >= zero));
    }

    #[test]
    fn half_threshold_balance() {
        // crude balance check: ~half the words fall below the p=1/2 threshold
        let t = bernoulli_threshold(&BigUint::from(1u32), &BigUint::from(2u32));
        let mut below = 0u32;
        for i in 0..10_000u64 {
            if (vertex_word(mix(i), 1, 3) as u128) < t {
                below += 1;
            }
        }
        assert!((4_600..=5_400).contains(&below), "below = {below}");
    }
}
