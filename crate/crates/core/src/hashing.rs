//! The random-oracle hash layer.
//!
//! A hash state is a finite map from keys to outputs: hashing an unseen key
//! draws a fresh uniform output and records it, hashing a seen key returns
//! the recorded output and changes nothing. Three layers are provided — a
//! single hash, a vector of k independent hashes, and the multiplexed hash
//! used by the blocked combinator (a meta-hash choosing a block, composed
//! with that block's own layer).
//!
//! States are persistent values: every operation returns a new state. The
//! randomness comes through [`DrawSource`], so the same code runs under a
//! seeded generator, or under the scripted source the enumeration oracle
//! uses to visit every outcome.

use crate::AmqError;

/// Canonical key domain: callers with richer keys pre-hash to 64 bits.
pub type Key = u64;

/// Supplier of uniform draws. Draws over a domain of size 1 are free: they
/// have only one outcome and consume nothing.
pub trait DrawSource {
    fn draw(&mut self, domain: u64) -> u64;
}

/// Deterministic counter-based generator. The value at draw `i` depends only
/// on `(seed, i)`, so streams can be split per trial with [`Rng::stream`]
/// and trials stay independent of scheduling order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rng {
    seed: u64,
    counter: u64,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { seed, counter: 0 }
    }

    /// Independent stream for one trial of a multi-trial run.
    pub fn stream(seed: u64, trial: u64) -> Self {
        Rng::new(mix(seed ^ mix(trial).rotate_left(32)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let value = mix(self
            .seed
            .wrapping_add(self.counter.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        self.counter += 1;
        value
    }
}

impl DrawSource for Rng {
    fn draw(&mut self, domain: u64) -> u64 {
        assert!(domain >= 1, "draw domain must be at least 1");
        if domain == 1 {
            return 0;
        }
        // Rejection sampling: accept x in [0, floor(2^64/domain)*domain).
        let reject_above = u64::MAX - (u64::MAX % domain + 1) % domain;
        loop {
            let x = self.next_u64();
            if x <= reject_above {
                return x % domain;
            }
        }
    }
}

/// One hash output: an index into `[0, domain)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HashOutput {
    pub index: u64,
    pub domain: u64,
}

impl HashOutput {
    pub fn new(index: u64, domain: u64) -> Self {
        debug_assert!(index < domain);
        HashOutput { index, domain }
    }
}

/// State of a single random-oracle hash with outputs in `[0, domain_size)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashState {
    domain: u64,
    // Sorted by key, so equality is map equality and serialization is
    // canonical.
    entries: Vec<(Key, u64)>,
}

impl HashState {
    pub fn new(domain_size: u64) -> Result<Self, AmqError> {
        if domain_size == 0 {
            return Err(AmqError::InvalidParameter(
                "hash domain size must be at least 1".into(),
            ));
        }
        Ok(HashState {
            domain: domain_size,
            entries: Vec::new(),
        })
    }

    pub fn domain_size(&self) -> u64 {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, key: Key) -> Option<HashOutput> {
        self.entries
            .binary_search_by_key(&key, |&(k, _)| k)
            .ok()
            .map(|at| HashOutput::new(self.entries[at].1, self.domain))
    }

    fn record(&self, key: Key, index: u64) -> Self {
        let mut entries = self.entries.clone();
        match entries.binary_search_by_key(&key, |&(k, _)| k) {
            Ok(at) => entries[at].1 = index,
            Err(at) => entries.insert(at, (key, index)),
        }
        HashState {
            domain: self.domain,
            entries,
        }
    }

    pub(crate) fn entries(&self) -> &[(Key, u64)] {
        &self.entries
    }

    pub(crate) fn from_entries(domain: u64, entries: Vec<(Key, u64)>) -> Self {
        HashState { domain, entries }
    }
}

/// A vector of `k` independent hash states sharing one output domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashVector {
    states: Vec<HashState>,
}

impl HashVector {
    pub fn new(hash_count: u64, domain_size: u64) -> Result<Self, AmqError> {
        if hash_count == 0 {
            return Err(AmqError::InvalidParameter(
                "hash vector needs at least 1 hash".into(),
            ));
        }
        let state = HashState::new(domain_size)?;
        Ok(HashVector {
            states: vec![state; hash_count as usize],
        })
    }

    pub fn hash_count(&self) -> u64 {
        self.states.len() as u64
    }

    pub fn domain_size(&self) -> u64 {
        self.states[0].domain_size()
    }

    pub fn states(&self) -> &[HashState] {
        &self.states
    }
}

/// Meta-hash choosing one of `m` blocks, paired with one inner hash layer
/// per block. Hashing routes through the meta-hash first; only the chosen
/// block's inner state can change.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplexedHash<H> {
    meta: HashState,
    inner: Vec<H>,
}

impl<H: HashLayer> MultiplexedHash<H> {
    /// `template` is cloned once per block; pass a fresh (empty) layer.
    pub fn new(blocks: u64, template: H) -> Result<Self, AmqError> {
        if blocks == 0 {
            return Err(AmqError::InvalidParameter(
                "multiplexed hash needs at least 1 block".into(),
            ));
        }
        Ok(MultiplexedHash {
            meta: HashState::new(blocks)?,
            inner: vec![template; blocks as usize],
        })
    }

    pub fn block_count(&self) -> u64 {
        self.inner.len() as u64
    }

    pub fn meta(&self) -> &HashState {
        &self.meta
    }

    pub fn inner(&self) -> &[H] {
        &self.inner
    }
}

/// Common face of the three hash layers: hash a key (recording the result),
/// and inspect what a state already knows.
pub trait HashLayer: Clone + PartialEq + std::fmt::Debug {
    type Output: Clone + PartialEq + std::fmt::Debug;

    /// Returns the recorded output unchanged for a seen key; draws, records
    /// and returns a fresh uniform output for an unseen one.
    fn hash(&self, key: Key, src: &mut dyn DrawSource) -> (Self, Self::Output);

    /// Map-lookup semantics: does this state map `key` to `output`?
    fn contains(&self, key: Key, output: &Self::Output) -> bool;

    /// True iff the state holds no mapping for `key`.
    fn unseen(&self, key: Key) -> bool;
}

impl HashLayer for HashState {
    type Output = HashOutput;

    fn hash(&self, key: Key, src: &mut dyn DrawSource) -> (Self, HashOutput) {
        match self.lookup(key) {
            Some(output) => (self.clone(), output),
            None => {
                let index = src.draw(self.domain);
                let output = HashOutput::new(index, self.domain);
                (self.record(key, index), output)
            }
        }
    }

    fn contains(&self, key: Key, output: &HashOutput) -> bool {
        self.lookup(key) == Some(*output)
    }

    fn unseen(&self, key: Key) -> bool {
        self.lookup(key).is_none()
    }
}

impl HashLayer for HashVector {
    type Output = Vec<HashOutput>;

    fn hash(&self, key: Key, src: &mut dyn DrawSource) -> (Self, Vec<HashOutput>) {
        let mut states = Vec::with_capacity(self.states.len());
        let mut outputs = Vec::with_capacity(self.states.len());
        for state in &self.states {
            let (state, output) = state.hash(key, src);
            states.push(state);
            outputs.push(output);
        }
        (HashVector { states }, outputs)
    }

    fn contains(&self, key: Key, outputs: &Vec<HashOutput>) -> bool {
        outputs.len() == self.states.len()
            && self
                .states
                .iter()
                .zip(outputs)
                .all(|(state, output)| state.contains(key, output))
    }

    fn unseen(&self, key: Key) -> bool {
        self.states.iter().all(|state| state.unseen(key))
    }
}

impl<H: HashLayer> HashLayer for MultiplexedHash<H> {
    type Output = (HashOutput, H::Output);

    fn hash(&self, key: Key, src: &mut dyn DrawSource) -> (Self, Self::Output) {
        let (meta, block) = self.meta.hash(key, src);
        let at = block.index as usize;
        let (inner_state, inner_out) = self.inner[at].hash(key, src);
        let mut inner = self.inner.clone();
        inner[at] = inner_state;
        (MultiplexedHash { meta, inner }, (block, inner_out))
    }

    fn contains(&self, key: Key, output: &Self::Output) -> bool {
        let (block, inner_out) = output;
        self.meta.contains(key, block) && self.inner[block.index as usize].contains(key, inner_out)
    }

    fn unseen(&self, key: Key) -> bool {
        self.meta.unseen(key) && self.inner.iter().all(|layer| layer.unseen(key))
    }
}
