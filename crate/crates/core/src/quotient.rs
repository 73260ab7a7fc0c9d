//! Quotient filter over a single p-bit hash: the upper q bits pick a bucket,
//! the lower r bits are stored there as a stand-in for the element.
//!
//! Buckets are unbounded multisets — this is the abstract structure whose
//! false positives are exactly full-output hash collisions, not the
//! linear-probing layout used by space-optimised implementations.

use crate::amq::Amq;
use crate::hashing::HashOutput;
use crate::AmqError;

/// Splits a `(quotient_bits + remainder_bits)`-bit output into
/// `(quotient, remainder)`: the quotient is the upper bits
/// (`output >> remainder_bits`), the remainder the lower ones.
pub fn quotient_split(
    output: u64,
    quotient_bits: u32,
    remainder_bits: u32,
) -> Result<(u64, u64), AmqError> {
    let total = quotient_bits + remainder_bits;
    let domain = 1u64
        .checked_shl(total)
        .ok_or_else(|| AmqError::InvalidParameter("hash width exceeds 63 bits".into()))?;
    if output >= domain {
        return Err(AmqError::IndexOutOfRange {
            index: output,
            size: domain,
        });
    }
    Ok((
        output >> remainder_bits,
        output & ((1u64 << remainder_bits) - 1),
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientState {
    quotient_bits: u32,
    remainder_bits: u32,
    // One sorted multiset of remainders per bucket.
    buckets: Vec<Vec<u64>>,
}

impl QuotientState {
    /// Empty table of `2^quotient_bits` buckets.
    pub fn new(quotient_bits: u32, remainder_bits: u32) -> Result<Self, AmqError> {
        crate::analytic::QuotientParams::new(quotient_bits, remainder_bits)?;
        Ok(QuotientState {
            quotient_bits,
            remainder_bits,
            buckets: vec![Vec::new(); 1usize << quotient_bits],
        })
    }

    pub fn quotient_bits(&self) -> u32 {
        self.quotient_bits
    }

    pub fn remainder_bits(&self) -> u32 {
        self.remainder_bits
    }

    pub fn total_bits(&self) -> u32 {
        self.quotient_bits + self.remainder_bits
    }

    /// Size of the hash output domain this table expects: `2^(q+r)`.
    pub fn domain_size(&self) -> u64 {
        1u64 << self.total_bits()
    }

    pub fn buckets(&self) -> &[Vec<u64>] {
        &self.buckets
    }

    pub(crate) fn from_buckets(
        quotient_bits: u32,
        remainder_bits: u32,
        buckets: Vec<Vec<u64>>,
    ) -> Self {
        QuotientState {
            quotient_bits,
            remainder_bits,
            buckets,
        }
    }

    fn split(&self, output: u64) -> Result<(usize, u64), AmqError> {
        let (quotient, remainder) =
            quotient_split(output, self.quotient_bits, self.remainder_bits)?;
        Ok((quotient as usize, remainder))
    }

    /// New state with the output's remainder filed under its bucket.
    pub fn insert(&self, output: u64) -> Result<Self, AmqError> {
        let (bucket, remainder) = self.split(output)?;
        let mut next = self.clone();
        let slot = next.buckets[bucket].partition_point(|&stored| stored <= remainder);
        next.buckets[bucket].insert(slot, remainder);
        Ok(next)
    }

    /// True iff the output's remainder occurs in its bucket.
    pub fn lookup(&self, output: u64) -> Result<bool, AmqError> {
        let (bucket, remainder) = self.split(output)?;
        Ok(self.buckets[bucket].binary_search(&remainder).is_ok())
    }

    /// Total stored multiplicity, equal to the number of inserts performed.
    pub fn stored_count(&self) -> u64 {
        self.buckets.iter().map(|bucket| bucket.len() as u64).sum()
    }
}

impl Amq for QuotientState {
    type Output = HashOutput;

    fn add_internal(&self, output: &HashOutput) -> Result<Self, AmqError> {
        self.insert(output.index)
    }

    fn query_internal(&self, output: &HashOutput) -> bool {
        self.lookup(output.index)
            .expect("hash output within table range")
    }

    fn available_capacity(&self, _further_inserts: u64) -> bool {
        true
    }
}
