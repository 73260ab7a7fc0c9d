//! Approximate membership query (AMQ) structures built over a random-oracle
//! hash layer, together with the machinery to check their probabilistic
//! claims: exact closed-form false-positive calculators, a brute-force
//! enumeration oracle over all hash outcomes, and a seeded Monte-Carlo
//! estimator.
//!
//! The filters (Bloom, counting Bloom, quotient, and the blocked combinator)
//! are split into a deterministic state component ([`Amq`]) and a hash layer
//! ([`HashLayer`]); probabilistic wrappers thread the two together. All
//! analysis runs on exact rationals; floating point appears only when a
//! number is reported.

pub mod amq;
pub mod analytic;
pub mod blocked;
pub mod bloom;
pub mod conformance;
pub mod counting;
pub mod exact;
pub mod harness;
pub mod hashing;
pub mod quotient;
pub mod wire;

pub use amq::{amq_add, amq_addm, amq_query, Amq, LawResult};
pub use analytic::{BloomParams, QuotientParams};
pub use blocked::BlockedState;
pub use bloom::BloomState;
pub use counting::CountingState;
pub use exact::{BigNat, ExactRational};
pub use hashing::{
    DrawSource, HashLayer, HashOutput, HashState, HashVector, Key, MultiplexedHash, Rng,
};
pub use quotient::QuotientState;

/// Errors shared across the filter, analysis and harness modules.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AmqError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: u64, size: u64 },
    #[error("capacity exceeded: structure cannot absorb {requested} further insert(s)")]
    CapacityExceeded { requested: u64 },
    #[error("counter at position {position} would exceed its bound {bound}")]
    CounterSaturation { position: u64, bound: u64 },
    #[error("removal would drive counter at position {position} below zero")]
    UnderflowRemoval { position: u64 },
    #[error("enumeration of {total} outcomes exceeds the limit of {limit}")]
    EnumerationTooLarge { total: u128, limit: u128 },
    #[error("exact evaluation refused for bits={bits}, hashes*inserts={draws}; use the float-mode evaluator")]
    ExactModeInfeasible { bits: u64, draws: u64 },
    #[error("malformed serialized data: {0}")]
    MalformedData(String),
}
