//! Counting Bloom filter: bounded counters in place of bits, which buys a
//! removal operation.
//!
//! Counters saturate by *erroring*, never by clamping — a clamped counter
//! would silently break removal. Removal itself is offered outside the
//! [`Amq`] contract (most AMQs have no deletion), and callers are trusted to
//! remove only values they previously inserted.
//!
//! The state also knows how many counter increments one logical insert
//! costs (the hash count of its layer): the capacity predicate "can absorb n
//! inserts" must hold however the hashes fall, i.e. even if all of an
//! insert's increments land on one counter.

use crate::amq::Amq;
use crate::bloom::BloomState;
use crate::hashing::HashOutput;
use crate::AmqError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountingState {
    bound: u64,
    hashes_per_insert: u64,
    counters: Vec<u64>,
}

impl CountingState {
    /// `counters` zeroed cells, each bounded by `bound`; one insert costs up
    /// to `hashes_per_insert` increments of a single counter.
    pub fn new(counters: u64, bound: u64, hashes_per_insert: u64) -> Result<Self, AmqError> {
        if counters == 0 || bound == 0 || hashes_per_insert == 0 {
            return Err(AmqError::InvalidParameter(
                "counting filter needs counters >= 1, bound >= 1 and hashes_per_insert >= 1".into(),
            ));
        }
        Ok(CountingState {
            bound,
            hashes_per_insert,
            counters: vec![0; counters as usize],
        })
    }

    pub fn counter_count(&self) -> u64 {
        self.counters.len() as u64
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn hashes_per_insert(&self) -> u64 {
        self.hashes_per_insert
    }

    /// Re-attach the per-insert hash count after deserialization (the wire
    /// format carries only counters and bound).
    pub fn with_hashes_per_insert(mut self, hashes_per_insert: u64) -> Result<Self, AmqError> {
        if hashes_per_insert == 0 {
            return Err(AmqError::InvalidParameter(
                "hashes_per_insert must be at least 1".into(),
            ));
        }
        self.hashes_per_insert = hashes_per_insert;
        Ok(self)
    }

    pub fn counters(&self) -> &[u64] {
        &self.counters
    }

    pub(crate) fn from_parts(bound: u64, hashes_per_insert: u64, counters: Vec<u64>) -> Self {
        CountingState {
            bound,
            hashes_per_insert,
            counters,
        }
    }

    fn check(&self, index: u64) -> Result<(), AmqError> {
        if index < self.counter_count() {
            Ok(())
        } else {
            Err(AmqError::IndexOutOfRange {
                index,
                size: self.counter_count(),
            })
        }
    }

    /// New state with each indexed counter incremented once per occurrence.
    pub fn increment(&self, indices: &[u64]) -> Result<Self, AmqError> {
        let mut next = self.clone();
        for &index in indices {
            self.check(index)?;
            let counter = &mut next.counters[index as usize];
            if *counter == self.bound {
                return Err(AmqError::CounterSaturation {
                    position: index,
                    bound: self.bound,
                });
            }
            *counter += 1;
        }
        Ok(next)
    }

    /// True iff every indexed counter is positive; vacuously true for no
    /// indices.
    pub fn query(&self, indices: &[u64]) -> Result<bool, AmqError> {
        for &index in indices {
            self.check(index)?;
        }
        Ok(indices
            .iter()
            .all(|&index| self.counters[index as usize] > 0))
    }

    /// New state with each indexed counter decremented once per occurrence.
    pub fn decrement(&self, indices: &[u64]) -> Result<Self, AmqError> {
        let mut next = self.clone();
        for &index in indices {
            self.check(index)?;
            let counter = &mut next.counters[index as usize];
            if *counter == 0 {
                return Err(AmqError::UnderflowRemoval { position: index });
            }
            *counter -= 1;
        }
        Ok(next)
    }

    /// Remove a previously inserted value by decrementing its hash outputs.
    pub fn remove_internal(&self, output: &[HashOutput]) -> Result<Self, AmqError> {
        self.decrement(&indices_of(output))
    }

    pub fn counter_sum(&self) -> u64 {
        self.counters.iter().sum()
    }

    /// Collapse to the Bloom filter that raises a bit wherever a counter is
    /// positive. This is the reduction witness to plain Bloom filters.
    pub fn to_bloom(&self) -> BloomState {
        let indices: Vec<u64> = (0..self.counter_count())
            .filter(|&i| self.counters[i as usize] > 0)
            .collect();
        BloomState::new(self.counter_count())
            .expect("counter count >= 1")
            .set(&indices)
            .expect("indices in range")
    }
}

fn indices_of(outputs: &[HashOutput]) -> Vec<u64> {
    outputs.iter().map(|out| out.index).collect()
}

impl Amq for CountingState {
    type Output = Vec<HashOutput>;

    fn add_internal(&self, output: &Self::Output) -> Result<Self, AmqError> {
        self.increment(&indices_of(output))
    }

    fn query_internal(&self, output: &Self::Output) -> bool {
        self.query(&indices_of(output))
            .expect("hash output within filter range")
    }

    fn available_capacity(&self, further_inserts: u64) -> bool {
        let needed = self.hashes_per_insert.saturating_mul(further_inserts);
        if needed > self.bound {
            return false;
        }
        let headroom = self.bound - needed;
        self.counters.iter().all(|&counter| counter <= headroom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn new_filter_is_zeroed() {
        let cf = CountingState::new(4, 7, 2).unwrap();
        assert_eq!(cf.counters(), &[0, 0, 0, 0]);
        assert_eq!(cf.counter_sum(), 0);
        assert!(!cf.query(&[0, 2]).unwrap());
        assert!(CountingState::new(0, 7, 2).is_err());
        assert!(CountingState::new(4, 0, 2).is_err());
    }

    #[test]
    fn increment_counts_multiplicity() {
        let cf = CountingState::new(2, 7, 1).unwrap();
        let cf = cf.increment(&[0, 0, 1]).unwrap();
        assert_eq!(cf.counters(), &[2, 1]);
        assert_eq!(cf.counter_sum(), 3);
    }

    #[test]
    fn saturation_is_an_error() {
        let cf = CountingState::new(2, 2, 1).unwrap();
        let cf = cf.increment(&[0, 0]).unwrap();
        assert_eq!(
            cf.increment(&[0]),
            Err(AmqError::CounterSaturation {
                position: 0,
                bound: 2
            })
        );
    }

    #[test]
    fn query_treats_positive_as_set() {
        let cf = CountingState::new(2, 7, 1)
            .unwrap()
            .increment(&[0, 0])
            .unwrap();
        assert!(cf.query(&[0]).unwrap());
        assert!(!cf.query(&[0, 1]).unwrap());
    }

    #[test]
    fn decrement_reverses_increment() {
        let cf = CountingState::new(2, 7, 1).unwrap();
        let up = cf.increment(&[0, 0, 1]).unwrap();
        let down = up.decrement(&[0, 1]).unwrap();
        assert_eq!(down.counters(), &[1, 0]);
        assert_eq!(
            down.decrement(&[1]),
            Err(AmqError::UnderflowRemoval { position: 1 })
        );
    }

    #[test]
    fn capacity_is_worst_case_per_counter() {
        let cf = CountingState::new(4, 6, 2).unwrap();
        assert!(cf.available_capacity(3)); // 2·3 = 6 fits the bound
        assert!(!cf.available_capacity(4));
        assert!(cf.available_capacity(0));
        let nearly_full = cf.increment(&[1, 1, 1, 1, 1]).unwrap();
        assert!(
            !nearly_full.available_capacity(1),
            "counter at 5 of 6 cannot take 2 more"
        );
        let full = nearly_full.increment(&[1]).unwrap();
        assert!(!full.available_capacity(1));
        assert!(full.available_capacity(0));
    }

    #[test]
    fn to_bloom_raises_positive_counters() {
        let cf = CountingState::new(3, 7, 1).unwrap();
        assert_eq!(cf.to_bloom(), BloomState::new(3).unwrap());
        let cf = cf.increment(&[0, 0, 2]).unwrap();
        assert_eq!(cf.to_bloom().set_indices(), vec![0, 2]);
    }

    #[test]
    fn query_is_read_only() {
        let cf = CountingState::new(3, 7, 1)
            .unwrap()
            .increment(&[1])
            .unwrap();
        let before = cf.clone();
        let _ = cf.query(&[0, 1, 2]).unwrap();
        assert_eq!(cf, before);
    }

    proptest! {
        #[test]
        fn remove_after_add_is_identity(indices in proptest::collection::vec(0u64..8, 0..10)) {
            let cf = CountingState::new(8, 16, 1).unwrap();
            let up = cf.increment(&indices).unwrap();
            let down = up.decrement(&indices).unwrap();
            prop_assert_eq!(down, cf);
        }

        #[test]
        fn counters_stay_in_bounds(ops in proptest::collection::vec((any::<bool>(), 0u64..4), 0..40)) {
            let mut cf = CountingState::new(4, 5, 1).unwrap();
            for (is_add, index) in ops {
                let result = if is_add {
                    cf.increment(&[index])
                } else {
                    cf.decrement(&[index])
                };
                if let Ok(next) = result {
                    cf = next;
                }
                prop_assert!(cf.counters().iter().all(|&c| c <= 5));
            }
        }
    }
}
