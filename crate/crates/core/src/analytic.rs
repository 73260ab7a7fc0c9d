//! Closed-form probabilities for the shipped filters, evaluated exactly.
//!
//! Everything returns an [`ExactRational`]; convert with [`to_float`] only
//! at the reporting boundary. The Bloom false-positive formula grows
//! factorially, so its exact evaluator refuses parameters past a fixed
//! feasibility bound and a float-mode companion covers larger scales.

use crate::exact::{binomial, factorial, pow_nat, pow_rat, ratio, stirling2, ExactRational};
use crate::AmqError;
use num_bigint::BigInt;
use num_traits::{One, Zero};

pub use crate::exact::to_float;

/// Exact evaluation is refused beyond these bounds; use the float-mode
/// evaluator instead.
pub const EXACT_MAX_BITS: u64 = 512;
pub const EXACT_MAX_DRAWS: u64 = 4096;

/// Bloom filter shape: `bits` cells and `hashes` hash functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BloomParams {
    pub bits: u64,
    pub hashes: u64,
}

impl BloomParams {
    pub fn new(bits: u64, hashes: u64) -> Result<Self, AmqError> {
        if bits == 0 || hashes == 0 {
            return Err(AmqError::InvalidParameter(
                "bloom filter needs bits >= 1 and hashes >= 1".into(),
            ));
        }
        Ok(BloomParams { bits, hashes })
    }
}

/// Quotient filter shape: a `(quotient_bits + remainder_bits)`-bit hash
/// output split into bucket selector and stored remainder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuotientParams {
    pub quotient_bits: u32,
    pub remainder_bits: u32,
}

impl QuotientParams {
    pub fn new(quotient_bits: u32, remainder_bits: u32) -> Result<Self, AmqError> {
        let total = quotient_bits + remainder_bits;
        if total == 0 {
            return Err(AmqError::InvalidParameter(
                "quotient filter needs quotient_bits + remainder_bits >= 1".into(),
            ));
        }
        if total > 63 {
            return Err(AmqError::InvalidParameter(
                "quotient filter supports at most 63 total hash bits".into(),
            ));
        }
        Ok(QuotientParams {
            quotient_bits,
            remainder_bits,
        })
    }

    pub fn total_bits(&self) -> u32 {
        self.quotient_bits + self.remainder_bits
    }

    pub fn domain_size(&self) -> u64 {
        1u64 << self.total_bits()
    }
}

/// Blocked combinator shape: `blocks` independent copies of an inner
/// structure behind a meta-hash.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockedParams<P> {
    pub blocks: u64,
    pub inner: P,
}

impl<P> BlockedParams<P> {
    pub fn new(blocks: u64, inner: P) -> Result<Self, AmqError> {
        if blocks == 0 {
            return Err(AmqError::InvalidParameter(
                "blocked structure needs at least 1 block".into(),
            ));
        }
        Ok(BlockedParams { blocks, inner })
    }
}

/// Probability that one particular cell is set after `inserts` distinct
/// unseen values: `1 − (1 − 1/bits)^(hashes·inserts)`.
pub fn bloom_bit_set_prob(params: &BloomParams, inserts: u64) -> ExactRational {
    let miss = ExactRational::one() - ratio(1, params.bits);
    ExactRational::one() - pow_rat(&miss, params.hashes * inserts)
}

/// Exact Bloom false-positive probability after `inserts` distinct unseen
/// values, for a query of a further unseen value:
///
/// ```text
/// (1 / m^(k(l+1))) · Σ_{i=1..m} i^k · i! · C(m,i) · S(kl, i)
/// ```
///
/// with `m = bits`, `k = hashes`, `l = inserts` and `S` the Stirling number
/// of the second kind. Refuses infeasibly large parameters; see
/// [`bloom_false_positive_float`] for those.
pub fn bloom_false_positive(params: &BloomParams, inserts: u64) -> Result<ExactRational, AmqError> {
    let draws = params.hashes * inserts;
    if params.bits > EXACT_MAX_BITS || draws > EXACT_MAX_DRAWS {
        return Err(AmqError::ExactModeInfeasible {
            bits: params.bits,
            draws,
        });
    }
    let mut sum = BigInt::zero();
    // S(kl, i) vanishes for i > kl, so the sum is effectively truncated.
    for i in 1..=params.bits.min(draws.max(1)) {
        let term = pow_nat(i, params.hashes)
            * factorial(i)
            * binomial(params.bits, i)
            * stirling2(draws, i);
        sum += BigInt::from(term);
    }
    let denom = BigInt::from(pow_nat(params.bits, params.hashes * (inserts + 1)));
    Ok(ExactRational::new(sum, denom))
}

/// Float-mode companion of [`bloom_false_positive`]: each term of the sum is
/// still built from exact integers (including the Stirling factor), but the
/// division happens per term in double precision and the terms are combined
/// with compensated (Kahan) summation.
pub fn bloom_false_positive_float(params: &BloomParams, inserts: u64) -> f64 {
    let draws = params.hashes * inserts;
    if inserts == 0 {
        return 0.0;
    }
    let denom = BigInt::from(pow_nat(params.bits, params.hashes * (inserts + 1)));
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for i in 1..=params.bits.min(draws) {
        let term = pow_nat(i, params.hashes)
            * factorial(i)
            * binomial(params.bits, i)
            * stirling2(draws, i);
        let term = to_float(&ExactRational::new(BigInt::from(term), denom.clone()));
        let y = term - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Bloom's original approximation `(1 − (1 − 1/m)^(kl))^k`.
///
/// This is a historically incorrect approximation of the false-positive
/// probability — it assumes independence between the queried cells — and is
/// provided only for comparison against [`bloom_false_positive`].
pub fn bloom_classic_bound(params: &BloomParams, inserts: u64) -> ExactRational {
    pow_rat(&bloom_bit_set_prob(params, inserts), params.hashes)
}

/// Quotient filter false-positive probability after `inserts` distinct
/// unseen values: `1 − (1 − 1/2^p)^l` with `p` the total hash width. A false
/// positive requires a full hash collision, so only `p` matters.
pub fn quotient_false_positive(params: &QuotientParams, inserts: u64) -> ExactRational {
    let miss = ExactRational::one() - ratio(1, params.domain_size());
    ExactRational::one() - pow_rat(&miss, inserts)
}

/// False-positive probability of a blocked structure: the inserts
/// distribute binomially over the queried block, mixing the inner
/// false-positive function `inner_fp`:
///
/// ```text
/// Σ_{i=0..l} C(l,i) · (1/m)^i · (1 − 1/m)^(l−i) · inner_fp(i)
/// ```
///
/// with `m = blocks` and `l = inserts`.
pub fn blocked_false_positive(
    blocks: u64,
    inserts: u64,
    inner_fp: impl Fn(u64) -> ExactRational,
) -> ExactRational {
    let hit = ratio(1, blocks);
    let miss = ExactRational::one() - &hit;
    let mut sum = ExactRational::zero();
    for i in 0..=inserts {
        let weight = ExactRational::from(BigInt::from(binomial(inserts, i)))
            * pow_rat(&hit, i)
            * pow_rat(&miss, inserts - i);
        sum += weight * inner_fp(i);
    }
    sum
}

/// Float-mode companion of [`blocked_false_positive`]: the binomial weights
/// are computed exactly and rounded once, the inner probabilities come from
/// a float-valued function.
pub fn blocked_false_positive_float(
    blocks: u64,
    inserts: u64,
    inner_fp: impl Fn(u64) -> f64,
) -> f64 {
    let hit = ratio(1, blocks);
    let miss = ExactRational::one() - &hit;
    let mut sum = 0.0f64;
    for i in 0..=inserts {
        let weight = ExactRational::from(BigInt::from(binomial(inserts, i)))
            * pow_rat(&hit, i)
            * pow_rat(&miss, inserts - i);
        sum += to_float(&weight) * inner_fp(i);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::format_ratio;

    #[test]
    fn bit_set_prob_edges() {
        let p = BloomParams::new(7, 3).unwrap();
        assert!(bloom_bit_set_prob(&p, 0).is_zero());
        let single = BloomParams::new(1, 1).unwrap();
        assert!(bloom_bit_set_prob(&single, 1).is_one());
        let two = BloomParams::new(2, 1).unwrap();
        assert_eq!(bloom_bit_set_prob(&two, 1), ratio(1, 2));
    }

    #[test]
    fn false_positive_known_values() {
        let p = BloomParams::new(2, 1).unwrap();
        assert!(bloom_false_positive(&p, 0).unwrap().is_zero());
        assert_eq!(bloom_false_positive(&p, 1).unwrap(), ratio(1, 2));
        let p = BloomParams::new(2, 2).unwrap();
        assert_eq!(bloom_false_positive(&p, 1).unwrap(), ratio(5, 8));
    }

    #[test]
    fn classic_bound_known_values() {
        let p = BloomParams::new(2, 2).unwrap();
        assert_eq!(bloom_classic_bound(&p, 1), ratio(9, 16));
        // Distinct from the exact value 5/8: the approximation is not exact.
        assert_ne!(
            bloom_classic_bound(&p, 1),
            bloom_false_positive(&p, 1).unwrap()
        );
        assert!(bloom_classic_bound(&p, 0).is_zero());
    }

    #[test]
    fn false_positive_monotone_and_bounded() {
        for bits in 1..=16u64 {
            for hashes in 1..=4u64 {
                let p = BloomParams::new(bits, hashes).unwrap();
                let mut previous = ExactRational::zero();
                for inserts in 0..=16u64 {
                    let fp = bloom_false_positive(&p, inserts).unwrap();
                    assert!(fp >= ExactRational::zero() && fp <= ExactRational::one());
                    assert!(
                        fp >= previous,
                        "fp not monotone at m={bits} k={hashes} l={inserts}"
                    );
                    previous = fp;
                }
            }
        }
    }

    #[test]
    fn single_hash_fp_equals_bit_set_prob() {
        // With one hash a query is positive iff its single cell is set.
        for bits in 1..=16u64 {
            let p = BloomParams::new(bits, 1).unwrap();
            for inserts in 0..=16u64 {
                assert_eq!(
                    bloom_false_positive(&p, inserts).unwrap(),
                    bloom_bit_set_prob(&p, inserts),
                    "m={bits} l={inserts}"
                );
            }
        }
    }

    #[test]
    fn feasibility_guard_trips() {
        let p = BloomParams::new(1024, 2).unwrap();
        assert!(matches!(
            bloom_false_positive(&p, 1),
            Err(AmqError::ExactModeInfeasible { .. })
        ));
        let p = BloomParams::new(16, 8).unwrap();
        assert!(matches!(
            bloom_false_positive(&p, 1000),
            Err(AmqError::ExactModeInfeasible { .. })
        ));
    }

    #[test]
    fn float_mode_matches_exact_where_both_run() {
        for (bits, hashes, inserts) in [(8u64, 2u64, 4u64), (64, 3, 10), (128, 4, 16)] {
            let p = BloomParams::new(bits, hashes).unwrap();
            let exact = to_float(&bloom_false_positive(&p, inserts).unwrap());
            let float = bloom_false_positive_float(&p, inserts);
            assert!(
                (exact - float).abs() <= 1e-12 * exact.max(1e-300),
                "m={bits} k={hashes} l={inserts}: {exact} vs {float}"
            );
        }
    }

    #[test]
    fn quotient_known_values() {
        let p = QuotientParams::new(0, 1).unwrap();
        assert!(quotient_false_positive(&p, 0).is_zero());
        assert_eq!(quotient_false_positive(&p, 1), ratio(1, 2));
        let p = QuotientParams::new(1, 1).unwrap();
        assert_eq!(quotient_false_positive(&p, 2), ratio(7, 16));
    }

    #[test]
    fn blocked_mixture_known_values() {
        let inner = BloomParams::new(2, 1).unwrap();
        let f = |i: u64| bloom_false_positive(&inner, i).unwrap();
        // One block: only the i = l term survives.
        assert_eq!(blocked_false_positive(1, 3, f), f(3));
        // No inserts: only the i = 0 term.
        assert_eq!(blocked_false_positive(5, 0, f), f(0));
        // Two blocks, one insert: (1/2)·f(0) + (1/2)·f(1) = 1/4.
        assert_eq!(blocked_false_positive(2, 1, f), ratio(1, 4));
    }

    #[test]
    fn blocked_float_tracks_exact() {
        let inner = BloomParams::new(8, 2).unwrap();
        let exact = blocked_false_positive(3, 5, |i| bloom_false_positive(&inner, i).unwrap());
        let float = blocked_false_positive_float(3, 5, |i| bloom_false_positive_float(&inner, i));
        assert!((to_float(&exact) - float).abs() < 1e-12);
    }

    #[test]
    fn report_formats() {
        let p = BloomParams::new(2, 2).unwrap();
        let fp = bloom_false_positive(&p, 1).unwrap();
        assert_eq!(format_ratio(&fp), "5/8");
        assert_eq!(to_float(&fp), 0.625);
    }

    #[test]
    fn params_validation() {
        assert!(BloomParams::new(0, 1).is_err());
        assert!(BloomParams::new(1, 0).is_err());
        assert!(QuotientParams::new(0, 0).is_err());
        assert!(QuotientParams::new(32, 32).is_err());
        assert!(BlockedParams::new(0, ()).is_err());
    }
}
