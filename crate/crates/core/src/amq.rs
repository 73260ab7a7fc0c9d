//! The generic AMQ contract and the probabilistic wrappers over a hash layer.
//!
//! A filter instance supplies three deterministic pieces: folding a hash
//! output into its state, querying a hash output against its state, and a
//! capacity predicate meaning "can absorb n further inserts". The wrappers
//! [`amq_add`], [`amq_addm`] and [`amq_query`] thread a [`HashLayer`] through
//! those pieces; the hash layer is an explicit parameter, not part of the
//! filter, so several filters can share one.
//!
//! Two laws are required of every instance and are checked, not assumed:
//! inserting an output makes queries for it true (insertion validity), and
//! inserts never turn an existing true query false (query preservation).
//! Together they force the no-false-negatives behaviour that
//! [`check_nfn`] replays seed by seed.

use crate::hashing::{DrawSource, HashLayer, Key, Rng};
use crate::AmqError;
use std::fmt::Write as _;

/// Deterministic core of an AMQ: state plus add/query/capacity over the
/// outputs of a matching hash layer.
pub trait Amq: Clone {
    type Output: Clone + PartialEq + std::fmt::Debug;

    /// New state with `output` folded in. Errors bubble structural limits
    /// such as counter saturation; they cannot occur while
    /// `available_capacity` holds.
    fn add_internal(&self, output: &Self::Output) -> Result<Self, AmqError>;

    /// Membership verdict for `output` against this state.
    fn query_internal(&self, output: &Self::Output) -> bool;

    /// Whether the state can absorb `further_inserts` more inserts, however
    /// the hashes fall.
    fn available_capacity(&self, further_inserts: u64) -> bool;
}

/// Hash `key`, fold the output into the filter. Fails with
/// [`AmqError::CapacityExceeded`] when the filter cannot take one more
/// insert.
pub fn amq_add<H, A>(
    key: Key,
    layer: &H,
    state: &A,
    src: &mut dyn DrawSource,
) -> Result<(H, A), AmqError>
where
    H: HashLayer,
    A: Amq<Output = H::Output>,
{
    if !state.available_capacity(1) {
        return Err(AmqError::CapacityExceeded { requested: 1 });
    }
    let (layer, output) = layer.hash(key, src);
    let state = state.add_internal(&output)?;
    Ok((layer, state))
}

/// Left fold of [`amq_add`] over `keys`.
pub fn amq_addm<H, A>(
    keys: &[Key],
    layer: &H,
    state: &A,
    src: &mut dyn DrawSource,
) -> Result<(H, A), AmqError>
where
    H: HashLayer,
    A: Amq<Output = H::Output>,
{
    if !state.available_capacity(keys.len() as u64) {
        return Err(AmqError::CapacityExceeded {
            requested: keys.len() as u64,
        });
    }
    let mut layer = layer.clone();
    let mut state = state.clone();
    for &key in keys {
        (layer, state) = amq_add(key, &layer, &state, src)?;
    }
    Ok((layer, state))
}

/// Hash `key` and query the filter. The filter state is untouched; the hash
/// layer may learn the key.
pub fn amq_query<H, A>(key: Key, layer: &H, state: &A, src: &mut dyn DrawSource) -> (H, bool)
where
    H: HashLayer,
    A: Amq<Output = H::Output>,
{
    let (layer, output) = layer.hash(key, src);
    let verdict = state.query_internal(&output);
    (layer, verdict)
}

/// Outcome of one executable law check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LawResult {
    Holds,
    /// The scenario violated a precondition (for example, no capacity); the
    /// law was not exercised and this is not a failure.
    Rejected(AmqError),
    /// The law failed; carries a counterexample trace.
    Violated(String),
}

impl LawResult {
    pub fn holds(&self) -> bool {
        matches!(self, LawResult::Holds)
    }
}

/// Replays `add x; addm xs; query x` under every seed and demands a `true`
/// verdict each time. All keys must be distinct and unseen in `layer`, and
/// the filter must have capacity for all of them.
pub fn check_nfn<H, A>(
    layer: &H,
    state: &A,
    x: Key,
    xs: &[Key],
    seeds: impl IntoIterator<Item = u64>,
) -> LawResult
where
    H: HashLayer,
    A: Amq<Output = H::Output>,
{
    let mut keys = vec![x];
    keys.extend_from_slice(xs);
    keys.sort_unstable();
    keys.dedup();
    if keys.len() != xs.len() + 1 {
        return LawResult::Rejected(AmqError::InvalidParameter(
            "scenario keys must be distinct".into(),
        ));
    }
    if keys.iter().any(|&k| !layer.unseen(k)) {
        return LawResult::Rejected(AmqError::InvalidParameter(
            "scenario keys must be unseen in the hash layer".into(),
        ));
    }
    if !state.available_capacity(xs.len() as u64 + 1) {
        return LawResult::Rejected(AmqError::CapacityExceeded {
            requested: xs.len() as u64 + 1,
        });
    }
    for seed in seeds {
        let mut rng = Rng::new(seed);
        let run = amq_add(x, layer, state, &mut rng)
            .and_then(|(layer, state)| amq_addm(xs, &layer, &state, &mut rng));
        let (layer, state) = match run {
            Ok(pair) => pair,
            Err(err) => return LawResult::Rejected(err),
        };
        let (_, verdict) = amq_query(x, &layer, &state, &mut rng);
        if !verdict {
            let mut trace = String::new();
            let _ = write!(
                trace,
                "query for {x} returned false under seed {seed} after inserting {:?}",
                xs
            );
            return LawResult::Violated(trace);
        }
    }
    LawResult::Holds
}

/// Checks the two state-mapping laws for a reduction from filter `A` to
/// filter `B` over the given `(state, output)` scenarios:
/// mapping commutes with add, and the mapped state answers queries exactly
/// as the original does.
pub fn check_amq_map<A, B>(map_state: impl Fn(&A) -> B, scenarios: &[(A, A::Output)]) -> LawResult
where
    A: Amq + std::fmt::Debug,
    B: Amq<Output = A::Output> + PartialEq + std::fmt::Debug,
{
    for (i, (state, output)) in scenarios.iter().enumerate() {
        if !state.available_capacity(1) {
            return LawResult::Rejected(AmqError::CapacityExceeded { requested: 1 });
        }
        let added = match state.add_internal(output) {
            Ok(added) => added,
            Err(err) => return LawResult::Rejected(err),
        };
        let mapped_then_added = match map_state(state).add_internal(output) {
            Ok(mapped) => mapped,
            Err(err) => return LawResult::Rejected(err),
        };
        if map_state(&added) != mapped_then_added {
            return LawResult::Violated(format!(
                "scenario {i}: mapping does not commute with add of {output:?} on {state:?}"
            ));
        }
        if map_state(state).query_internal(output) != state.query_internal(output) {
            return LawResult::Violated(format!(
                "scenario {i}: mapped query disagrees for {output:?} on {state:?}"
            ));
        }
    }
    LawResult::Holds
}

/// Insertion validity over explicit `(state, output)` cases: with capacity
/// available, a query for a freshly added output answers true.
pub fn check_insertion_validity<A>(cases: &[(A, A::Output)]) -> LawResult
where
    A: Amq + std::fmt::Debug,
{
    for (i, (state, output)) in cases.iter().enumerate() {
        if !state.available_capacity(1) {
            return LawResult::Rejected(AmqError::CapacityExceeded { requested: 1 });
        }
        let added = match state.add_internal(output) {
            Ok(added) => added,
            Err(err) => return LawResult::Rejected(err),
        };
        if !added.query_internal(output) {
            return LawResult::Violated(format!(
                "case {i}: query false right after adding {output:?} to {state:?}"
            ));
        }
    }
    LawResult::Holds
}

/// Query preservation over `(state, queried, inserted)` cases: a true query
/// stays true after any further insert.
pub fn check_query_preservation<A>(cases: &[(A, A::Output, A::Output)]) -> LawResult
where
    A: Amq + std::fmt::Debug,
{
    for (i, (state, queried, inserted)) in cases.iter().enumerate() {
        if !state.available_capacity(1) {
            return LawResult::Rejected(AmqError::CapacityExceeded { requested: 1 });
        }
        if !state.query_internal(queried) {
            continue;
        }
        let added = match state.add_internal(inserted) {
            Ok(added) => added,
            Err(err) => return LawResult::Rejected(err),
        };
        if !added.query_internal(queried) {
            return LawResult::Violated(format!(
                "case {i}: query for {queried:?} turned false after inserting {inserted:?} into {state:?}"
            ));
        }
    }
    LawResult::Holds
}
