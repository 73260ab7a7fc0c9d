//! Exact combinatorics: factorials, binomials, integer powers and Stirling
//! numbers of the second kind, all on arbitrary-precision integers.
//!
//! Every closed-form probability in this crate is assembled from these
//! primitives, so nothing here ever rounds. Rationals are kept in lowest
//! terms with a positive denominator by construction.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Arbitrary-precision non-negative integer.
pub type BigNat = BigUint;

/// Arbitrary-precision rational, reduced and with a positive denominator.
/// Probability-valued results additionally satisfy `0 <= value <= 1`,
/// which callers assert where it matters.
pub type ExactRational = BigRational;

/// n!
pub fn factorial(n: u64) -> BigNat {
    let mut acc = BigNat::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// C(n, k), zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigNat {
    if k > n {
        return BigNat::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigNat::one();
    for i in 1..=k {
        // The running product of i consecutive integers is divisible by i!.
        acc = acc * (n - k + i) / i;
    }
    acc
}

/// base^e on naturals, with 0^0 = 1.
pub fn pow_nat(base: u64, e: u64) -> BigNat {
    if e == 0 {
        return BigNat::one();
    }
    BigNat::from(base).pow(u32::try_from(e).expect("exponent fits u32"))
}

/// m · (m−1) · … · (m−t+1), the falling factorial; zero when `t > m`.
pub fn falling_factorial(m: u64, t: u64) -> BigNat {
    if t > m {
        return BigNat::zero();
    }
    let mut acc = BigNat::one();
    for i in 0..t {
        acc *= m - i;
    }
    acc
}

/// Stirling number of the second kind S(n, t) via the inclusion–exclusion
/// closed form (1/t!)·Σ_{j=0..t} (−1)^j·C(t,j)·(t−j)^n.
///
/// The alternating sum is split into its positive and negative parts so the
/// whole computation stays on naturals; the subtraction and the division by
/// t! are both checked, so a formula bug cannot silently truncate.
pub fn stirling2(n: u64, t: u64) -> BigNat {
    let mut positive = BigNat::zero();
    let mut negative = BigNat::zero();
    for j in 0..=t {
        let term = binomial(t, j) * pow_nat(t - j, n);
        if j % 2 == 0 {
            positive += term;
        } else {
            negative += term;
        }
    }
    assert!(
        positive >= negative,
        "inclusion-exclusion sum for S({n},{t}) went negative"
    );
    let (quotient, remainder) = (positive - negative).div_rem(&factorial(t));
    assert!(
        remainder.is_zero(),
        "inclusion-exclusion sum for S({n},{t}) not divisible by t!"
    );
    quotient
}

/// S(n, t) via the standard recurrence S(n,t) = t·S(n−1,t) + S(n−1,t−1),
/// with S(0,0) = 1 and S(n,0) = S(0,t) = 0 otherwise. Kept as an
/// independent cross-check of [`stirling2`].
pub fn stirling2_recurrence(n: u64, t: u64) -> BigNat {
    if t > n {
        return BigNat::zero();
    }
    let t = usize::try_from(t).expect("t fits usize");
    // row[j] holds S(i, j) for the current i.
    let mut row = vec![BigNat::zero(); t + 1];
    row[0] = BigNat::one();
    for _ in 1..=n {
        let mut next = vec![BigNat::zero(); t + 1];
        for j in 1..=t {
            next[j] = &row[j] * j as u64 + &row[j - 1];
        }
        row = next;
    }
    row[t].clone()
}

/// base^e on rationals by repeated squaring; base^0 = 1.
pub fn pow_rat(base: &ExactRational, e: u64) -> ExactRational {
    let mut result = ExactRational::one();
    let mut square = base.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result *= &square;
        }
        e >>= 1;
        if e > 0 {
            square = &square * &square;
        }
    }
    result
}

/// num/den as an exact rational. Panics if `den` is zero.
pub fn ratio(num: u64, den: u64) -> ExactRational {
    ExactRational::new(num.into(), den.into())
}

/// Renders a rational as "num/den", always including the denominator
/// (so zero is "0/1"). This is the wire form used in reports.
pub fn format_ratio(x: &ExactRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses the "num/den" form produced by [`format_ratio`].
pub fn parse_ratio(s: &str) -> Option<ExactRational> {
    let (num, den) = s.split_once('/')?;
    let num = num.trim().parse().ok()?;
    let den: num_bigint::BigInt = den.trim().parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(ExactRational::new(num, den))
}

/// Nearest f64 to the given rational, rounding half to even, with the
/// full subnormal and overflow behaviour of IEEE 754 binary64.
pub fn to_float(x: &ExactRational) -> f64 {
    let negative = x.numer().sign() == num_bigint::Sign::Minus;
    let magnitude = rational_magnitude_to_float(x.numer().magnitude(), x.denom().magnitude());
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

fn rational_magnitude_to_float(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    // floor(log2(num/den)) is within one of the bit-length difference.
    let exp_estimate = num.bits() as i64 - den.bits() as i64;
    // Scale so the integer quotient carries at least 54 significant bits.
    let shift = 54 - exp_estimate;
    let (scaled_num, scaled_den) = if shift >= 0 {
        (num << shift as u64, den.clone())
    } else {
        (num.clone(), den << (-shift) as u64)
    };
    let (quotient, remainder) = scaled_num.div_rem(&scaled_den);
    let qbits = quotient.bits() as i64; // 54 or 55
    let mut exponent = qbits - 1 - shift; // floor(log2 value)

    if exponent > 1023 {
        return f64::INFINITY;
    }
    if exponent < -1022 {
        // Subnormal range: round value/2^-1074 to the nearest even integer.
        // The encoding is continuous at the normal boundary, so a mantissa of
        // 2^52 is simply the smallest normal number.
        let (q, r) = (num << 1074u64).div_rem(den);
        let mut mantissa = q.to_u64().expect("subnormal mantissa fits u64");
        match (&r << 1u8).cmp(den) {
            std::cmp::Ordering::Greater => mantissa += 1,
            std::cmp::Ordering::Equal => mantissa += mantissa & 1,
            std::cmp::Ordering::Less => {}
        }
        return f64::from_bits(mantissa);
    }

    let drop = (qbits - 53) as u64; // 1 or 2 bits to round away
    let mut mantissa = (&quotient >> drop).to_u64().expect("mantissa fits u64");
    let round_bit = quotient.bit(drop - 1);
    let sticky = !remainder.is_zero() || {
        let low_mask = (BigUint::one() << (drop - 1)) - BigUint::one();
        !(quotient & low_mask).is_zero()
    };
    if round_bit && (sticky || mantissa & 1 == 1) {
        mantissa += 1;
        if mantissa == 1 << 53 {
            mantissa >>= 1;
            exponent += 1;
            if exponent > 1023 {
                return f64::INFINITY;
            }
        }
    }
    let bits = (((exponent + 1023) as u64) << 52) | (mantissa & ((1 << 52) - 1));
    f64::from_bits(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;
    use proptest::prelude::*;

    /// Pascal-triangle recurrence, kept separate from the multiplicative
    /// formula used by `binomial`.
    fn pascal(n: u64, k: u64) -> BigNat {
        if k > n {
            return BigNat::zero();
        }
        let mut row = vec![BigNat::one()];
        for _ in 0..n {
            let mut next = vec![BigNat::one()];
            for w in row.windows(2) {
                next.push(&w[0] + &w[1]);
            }
            next.push(BigNat::one());
            row = next;
        }
        row[k as usize].clone()
    }

    #[test]
    fn factorial_small_values() {
        assert_eq!(factorial(0), BigNat::one());
        assert_eq!(factorial(1), BigNat::one());
        // Repeated multiplication by hand: 1*2*3*4*5.
        assert_eq!(factorial(5), BigNat::from(120u32));
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(7, 0), BigNat::one());
        assert_eq!(binomial(4, 2), pascal(4, 2));
        assert_eq!(binomial(4, 2), BigNat::from(6u32));
        assert_eq!(binomial(3, 5), BigNat::zero());
    }

    #[test]
    fn binomial_matches_pascal_recurrence() {
        for n in 0..=20u64 {
            for k in 0..=n + 2 {
                assert_eq!(binomial(n, k), pascal(n, k), "C({n},{k})");
            }
        }
    }

    #[test]
    fn binomial_symmetry() {
        for n in 0..=24u64 {
            for k in 0..=n {
                assert_eq!(binomial(n, k), binomial(n, n - k));
            }
        }
    }

    #[test]
    fn stirling_small_values() {
        for n in 0..=12u64 {
            assert_eq!(stirling2(n, n), BigNat::one(), "S({n},{n})");
            if n >= 1 {
                assert_eq!(stirling2(n, 1), BigNat::one(), "S({n},1)");
            }
        }
        // Partitions of {1,2,3} into 2 blocks: 1|23, 2|13, 3|12.
        assert_eq!(stirling2(3, 2), BigNat::from(3u32));
        assert_eq!(stirling2(4, 2), BigNat::from(7u32));
        assert_eq!(stirling2_recurrence(0, 0), BigNat::one());
        assert_eq!(stirling2_recurrence(3, 2), BigNat::from(3u32));
        assert_eq!(stirling2_recurrence(6, 3), BigNat::from(90u32));
    }

    #[test]
    fn stirling_closed_form_matches_recurrence() {
        for n in 0..=30u64 {
            for t in 0..=30 {
                assert_eq!(stirling2(n, t), stirling2_recurrence(n, t), "S({n},{t})");
            }
        }
    }

    #[test]
    fn stirling_partition_identity() {
        // Σ_t S(n,t)·m^(falling t) = m^n, exactly.
        for m in 0..=8u64 {
            for n in 0..=10u64 {
                let mut sum = BigNat::zero();
                for t in 0..=n {
                    sum += stirling2(n, t) * falling_factorial(m, t);
                }
                assert_eq!(sum, pow_nat(m, n), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn pow_rat_small_values() {
        let half = ratio(1, 2);
        assert_eq!(pow_rat(&half, 0), ExactRational::one());
        assert_eq!(pow_rat(&half, 3), ratio(1, 8));
        assert_eq!(pow_rat(&ratio(2, 3), 2), ratio(4, 9));
    }

    #[test]
    fn ratio_format_round_trips() {
        let x = ratio(5, 8);
        assert_eq!(format_ratio(&x), "5/8");
        assert_eq!(format_ratio(&ExactRational::zero()), "0/1");
        assert_eq!(parse_ratio("5/8"), Some(x));
        assert_eq!(parse_ratio("7/0"), None);
        assert_eq!(parse_ratio("5"), None);
    }

    #[test]
    fn to_float_exact_cases() {
        assert_eq!(to_float(&ratio(1, 2)), 0.5);
        assert_eq!(to_float(&ExactRational::zero()), 0.0);
        assert_eq!(to_float(&ratio(5, 8)), 0.625);
        assert_eq!(to_float(&ratio(1, 3)), 1.0 / 3.0);
        assert_eq!(to_float(&ratio(2, 3)), 2.0 / 3.0);
        assert_eq!(to_float(&-ratio(1, 3)), -(1.0 / 3.0));
        assert_eq!(to_float(&ratio(u64::MAX, 1)), u64::MAX as f64);
    }

    #[test]
    fn to_float_frozen_bit_patterns() {
        // Expected bits computed independently with CPython's Fraction ->
        // float conversion, which rounds to nearest-even.
        let big = |text: &str| -> num_bigint::BigInt { text.parse().unwrap() };
        let ten_pow = |e: u32| num_bigint::BigInt::from(10u32).pow(e);
        let two_pow = |e: u32| num_bigint::BigInt::from(2u32) << (e - 1);
        let cases: Vec<(ExactRational, u64)> = vec![
            (ratio(1, 3), 0x3fd5_5555_5555_5555),
            (ratio(2, 3), 0x3fe5_5555_5555_5555),
            (ratio(5, 8), 0x3fe4_0000_0000_0000),
            (
                ExactRational::new(ten_pow(40) + 1, 3 * ten_pow(40)),
                0x3fd5_5555_5555_5555,
            ),
            // Exactly halfway between 1.0 and its successor: ties to even.
            (
                ExactRational::new(two_pow(53) + 1, two_pow(53)),
                0x3ff0_0000_0000_0000,
            ),
            (
                ExactRational::new((two_pow(53) + 1) * 7, big("9")),
                0x4338_e38e_38e3_8e3a,
            ),
            // Subnormal range.
            (
                ExactRational::new(1.into(), ten_pow(308)),
                0x0007_30d6_7819_e8d2,
            ),
            (
                ExactRational::new(1.into(), two_pow(1074)),
                0x0000_0000_0000_0001,
            ),
            (
                ExactRational::new(3.into(), two_pow(1076)),
                0x0000_0000_0000_0001,
            ),
        ];
        for (value, bits) in cases {
            assert_eq!(
                to_float(&value).to_bits(),
                bits,
                "wrong rounding for {}",
                format_ratio(&value)
            );
        }
    }

    #[test]
    fn to_float_extremes() {
        // 2^-1074 is the smallest subnormal; half of it rounds to zero (even).
        let tiny = pow_rat(&ratio(1, 2), 1074);
        assert_eq!(to_float(&tiny), f64::from_bits(1));
        let half_tiny = pow_rat(&ratio(1, 2), 1075);
        assert_eq!(to_float(&half_tiny), 0.0);
        let just_above = &half_tiny + pow_rat(&ratio(1, 2), 1100);
        assert_eq!(to_float(&just_above), f64::from_bits(1));
        let huge = pow_rat(&ratio(2, 1), 1024);
        assert_eq!(to_float(&huge), f64::INFINITY);
        assert_eq!(to_float(&-huge), f64::NEG_INFINITY);
    }

    /// Exact value of a finite f64 as a rational.
    fn float_to_rational(x: f64) -> ExactRational {
        let bits = x.abs().to_bits();
        let exponent_field = (bits >> 52) & 0x7ff;
        let mantissa_field = bits & ((1 << 52) - 1);
        let (mantissa, exponent) = if exponent_field == 0 {
            (mantissa_field, -1074i64)
        } else {
            (mantissa_field | (1 << 52), exponent_field as i64 - 1075)
        };
        let mag = if exponent >= 0 {
            ExactRational::from(num_bigint::BigInt::from(mantissa) << exponent as u64)
        } else {
            ExactRational::new(
                mantissa.into(),
                num_bigint::BigInt::one() << (-exponent) as u64,
            )
        };
        if x.is_sign_negative() {
            -mag
        } else {
            mag
        }
    }

    proptest! {
        #[test]
        fn to_float_is_nearest_even(num in 1u64.., den in 1u64..) {
            let value = ratio(num, den);
            let rounded = to_float(&value);
            prop_assert!(rounded.is_finite());
            let err = (&value - &float_to_rational(rounded)).abs();
            // Against both neighbours: never further than half an ulp, and
            // exact halves land on an even mantissa.
            let next = float_to_rational(f64::from_bits(rounded.to_bits() + 1));
            let prev = float_to_rational(f64::from_bits(rounded.to_bits().saturating_sub(1)));
            let err_next = (&value - &next).abs();
            let err_prev = (&value - &prev).abs();
            prop_assert!(err <= err_next, "{num}/{den}: closer neighbour above");
            if rounded != 0.0 {
                prop_assert!(err <= err_prev, "{num}/{den}: closer neighbour below");
            }
            if err == err_next || (rounded != 0.0 && err == err_prev) {
                prop_assert_eq!(rounded.to_bits() & 1, 0, "{}/{}: tie must round to even", num, den);
            }
        }

        #[test]
        fn rational_ops_stay_reduced(a in 1u64..10_000, b in 1u64..10_000,
                                     c in 1u64..10_000, d in 1u64..10_000) {
            let x = ratio(a, b);
            let y = ratio(c, d);
            for value in [&x + &y, &x * &y, &x - &y, &x / &y] {
                let g = value.numer().magnitude().gcd(value.denom().magnitude());
                prop_assert!(g.is_one() || value.numer().is_zero());
                prop_assert!(value.denom().sign() == num_bigint::Sign::Plus);
            }
        }

        #[test]
        fn rational_ops_assoc_comm(a in 1u64..1000, b in 1u64..1000,
                                   c in 1u64..1000, d in 1u64..1000,
                                   e in 1u64..1000, f in 1u64..1000) {
            let x = ratio(a, b);
            let y = ratio(c, d);
            let z = ratio(e, f);
            prop_assert_eq!(&x + &y, &y + &x);
            prop_assert_eq!(&x * &y, &y * &x);
            prop_assert_eq!((&x + &y) + &z, &x + (&y + &z));
            prop_assert_eq!((&x * &y) * &z, &x * (&y * &z));
        }
    }
}
