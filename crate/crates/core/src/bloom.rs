//! Classic Bloom filter state: a fixed-length bit sequence.
//!
//! Only the deterministic part lives here — the bits, and positional
//! set/get/query over explicit indices. Hashing keys to indices is the
//! wrapper's job (see [`crate::amq`]).

use crate::amq::Amq;
use crate::hashing::HashOutput;
use crate::AmqError;

/// Bit sequence of fixed length. Bits are addressed positionally; storage is
/// packed 64-bit words, least-significant bit first, so serialization is
/// bit-exact across implementations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BloomState {
    bit_count: u64,
    words: Vec<u64>,
}

impl BloomState {
    /// All-clear filter of `bits` cells.
    pub fn new(bits: u64) -> Result<Self, AmqError> {
        if bits == 0 {
            return Err(AmqError::InvalidParameter(
                "bloom filter needs at least 1 bit".into(),
            ));
        }
        Ok(BloomState {
            bit_count: bits,
            words: vec![0; bits.div_ceil(64) as usize],
        })
    }

    pub fn bit_count(&self) -> u64 {
        self.bit_count
    }

    fn check(&self, index: u64) -> Result<(), AmqError> {
        if index < self.bit_count {
            Ok(())
        } else {
            Err(AmqError::IndexOutOfRange {
                index,
                size: self.bit_count,
            })
        }
    }

    /// New state with the given bits also set. Duplicates are harmless.
    pub fn set(&self, indices: &[u64]) -> Result<Self, AmqError> {
        let mut next = self.clone();
        for &index in indices {
            self.check(index)?;
            next.words[(index / 64) as usize] |= 1 << (index % 64);
        }
        Ok(next)
    }

    /// True iff every queried bit is set; vacuously true for no indices.
    pub fn query(&self, indices: &[u64]) -> Result<bool, AmqError> {
        for &index in indices {
            self.check(index)?;
        }
        Ok(indices.iter().all(|&index| self.bit_unchecked(index)))
    }

    pub fn get(&self, index: u64) -> Result<bool, AmqError> {
        self.check(index)?;
        Ok(self.bit_unchecked(index))
    }

    fn bit_unchecked(&self, index: u64) -> bool {
        self.words[(index / 64) as usize] >> (index % 64) & 1 == 1
    }

    /// Number of set bits.
    pub fn ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn from_words(bit_count: u64, words: Vec<u64>) -> Self {
        BloomState { bit_count, words }
    }

    /// The indices of all set bits, ascending.
    pub fn set_indices(&self) -> Vec<u64> {
        (0..self.bit_count)
            .filter(|&i| self.bit_unchecked(i))
            .collect()
    }
}

fn indices_of(outputs: &[HashOutput]) -> Vec<u64> {
    outputs.iter().map(|out| out.index).collect()
}

impl Amq for BloomState {
    type Output = Vec<HashOutput>;

    fn add_internal(&self, output: &Self::Output) -> Result<Self, AmqError> {
        self.set(&indices_of(output))
    }

    fn query_internal(&self, output: &Self::Output) -> bool {
        self.query(&indices_of(output))
            .expect("hash output within filter range")
    }

    fn available_capacity(&self, _further_inserts: u64) -> bool {
        true
    }
}
