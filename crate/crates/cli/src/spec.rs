//! Structure selection and per-structure dispatch: turning command-line
//! parameters into concrete filters, closed forms, oracle runs, simulations
//! and conformance suites.

use amq_core::analytic::{
    blocked_false_positive, blocked_false_positive_float, bloom_classic_bound,
    bloom_false_positive, bloom_false_positive_float, quotient_false_positive, to_float,
    BloomParams, QuotientParams,
};
use amq_core::blocked::BlockedState;
use amq_core::bloom::BloomState;
use amq_core::conformance::{self, LawReport};
use amq_core::counting::CountingState;
use amq_core::exact::ExactRational;
use amq_core::harness::{estimate_fp, oracle_fp, SimulationReport};
use amq_core::hashing::{HashState, HashVector, MultiplexedHash};
use amq_core::quotient::QuotientState;
use amq_core::AmqError;
use serde_json::json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum StructureKind {
    Bloom,
    Counting,
    Quotient,
    BlockedBloom,
    BlockedCounting,
    BlockedQuotient,
}

/// Raw structure parameters as given on the command line.
#[derive(Clone, Copy, Debug, Default)]
pub struct RawParams {
    pub m: Option<u64>,
    pub k: Option<u64>,
    pub p: Option<u32>,
    pub q: Option<u32>,
    pub r: Option<u32>,
    pub blocks: Option<u64>,
    pub bound: Option<u64>,
}

/// A fully resolved structure choice.
#[derive(Clone, Debug)]
pub enum StructureSpec {
    Bloom(BloomParams),
    Counting {
        inner: BloomParams,
        bound: u64,
    },
    Quotient(QuotientParams),
    BlockedBloom {
        blocks: u64,
        inner: BloomParams,
    },
    BlockedCounting {
        blocks: u64,
        inner: BloomParams,
        bound: u64,
    },
    BlockedQuotient {
        blocks: u64,
        inner: QuotientParams,
    },
}

fn bloom_params(raw: &RawParams) -> Result<BloomParams, String> {
    let bits = raw.m.ok_or("--m is required for this structure")?;
    let hashes = raw.k.ok_or("--k is required for this structure")?;
    BloomParams::new(bits, hashes).map_err(|err| err.to_string())
}

/// Accepts `--q/--r` (with `--p` as an optional cross-check) or `--p` alone,
/// in which case the width is split evenly.
fn quotient_params(raw: &RawParams) -> Result<QuotientParams, String> {
    let (q, r) = match (raw.q, raw.r, raw.p) {
        (Some(q), Some(r), p) => {
            if let Some(p) = p {
                if p != q + r {
                    return Err(format!("--p {p} does not equal --q {q} + --r {r}"));
                }
            }
            (q, r)
        }
        (None, None, Some(p)) => (p / 2, p - p / 2),
        _ => return Err("quotient structures need --q and --r, or --p alone".into()),
    };
    QuotientParams::new(q, r).map_err(|err| err.to_string())
}

fn block_count(raw: &RawParams) -> Result<u64, String> {
    let blocks = raw
        .blocks
        .ok_or("--blocks is required for blocked structures")?;
    if blocks == 0 {
        return Err("--blocks must be at least 1".into());
    }
    Ok(blocks)
}

fn counter_bound(raw: &RawParams) -> Result<u64, String> {
    let bound = raw
        .bound
        .ok_or("--bound is required for counting structures")?;
    if bound == 0 {
        return Err("--bound must be at least 1".into());
    }
    Ok(bound)
}

impl StructureSpec {
    pub fn resolve(kind: StructureKind, raw: &RawParams) -> Result<Self, String> {
        Ok(match kind {
            StructureKind::Bloom => StructureSpec::Bloom(bloom_params(raw)?),
            StructureKind::Counting => StructureSpec::Counting {
                inner: bloom_params(raw)?,
                bound: counter_bound(raw)?,
            },
            StructureKind::Quotient => StructureSpec::Quotient(quotient_params(raw)?),
            StructureKind::BlockedBloom => StructureSpec::BlockedBloom {
                blocks: block_count(raw)?,
                inner: bloom_params(raw)?,
            },
            StructureKind::BlockedCounting => StructureSpec::BlockedCounting {
                blocks: block_count(raw)?,
                inner: bloom_params(raw)?,
                bound: counter_bound(raw)?,
            },
            StructureKind::BlockedQuotient => StructureSpec::BlockedQuotient {
                blocks: block_count(raw)?,
                inner: quotient_params(raw)?,
            },
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            StructureSpec::Bloom(_) => "bloom",
            StructureSpec::Counting { .. } => "counting",
            StructureSpec::Quotient(_) => "quotient",
            StructureSpec::BlockedBloom { .. } => "blocked-bloom",
            StructureSpec::BlockedCounting { .. } => "blocked-counting",
            StructureSpec::BlockedQuotient { .. } => "blocked-quotient",
        }
    }

    pub fn params_label(&self) -> String {
        match self {
            StructureSpec::Bloom(p) => format!("m={};k={}", p.bits, p.hashes),
            StructureSpec::Counting { inner, bound } => {
                format!("m={};k={};bound={}", inner.bits, inner.hashes, bound)
            }
            StructureSpec::Quotient(p) => {
                format!(
                    "q={};r={};p={}",
                    p.quotient_bits,
                    p.remainder_bits,
                    p.total_bits()
                )
            }
            StructureSpec::BlockedBloom { blocks, inner } => {
                format!("blocks={};m={};k={}", blocks, inner.bits, inner.hashes)
            }
            StructureSpec::BlockedCounting {
                blocks,
                inner,
                bound,
            } => format!(
                "blocks={};m={};k={};bound={}",
                blocks, inner.bits, inner.hashes, bound
            ),
            StructureSpec::BlockedQuotient { blocks, inner } => format!(
                "blocks={};q={};r={};p={}",
                blocks,
                inner.quotient_bits,
                inner.remainder_bits,
                inner.total_bits()
            ),
        }
    }

    pub fn params_json(&self) -> serde_json::Value {
        match self {
            StructureSpec::Bloom(p) => json!({"m": p.bits, "k": p.hashes}),
            StructureSpec::Counting { inner, bound } => {
                json!({"m": inner.bits, "k": inner.hashes, "bound": bound})
            }
            StructureSpec::Quotient(p) => {
                json!({"q": p.quotient_bits, "r": p.remainder_bits, "p": p.total_bits()})
            }
            StructureSpec::BlockedBloom { blocks, inner } => {
                json!({"blocks": blocks, "m": inner.bits, "k": inner.hashes})
            }
            StructureSpec::BlockedCounting {
                blocks,
                inner,
                bound,
            } => {
                json!({"blocks": blocks, "m": inner.bits, "k": inner.hashes, "bound": bound})
            }
            StructureSpec::BlockedQuotient { blocks, inner } => {
                json!({"blocks": blocks, "q": inner.quotient_bits, "r": inner.remainder_bits,
                       "p": inner.total_bits()})
            }
        }
    }

    /// Exact false-positive probability after `inserts` unseen inserts.
    /// Counting filters share the Bloom closed form via their reduction.
    pub fn exact_fp(&self, inserts: u64) -> Result<ExactRational, AmqError> {
        match self {
            StructureSpec::Bloom(p) | StructureSpec::Counting { inner: p, .. } => {
                bloom_false_positive(p, inserts)
            }
            StructureSpec::Quotient(p) => Ok(quotient_false_positive(p, inserts)),
            StructureSpec::BlockedBloom { blocks, inner }
            | StructureSpec::BlockedCounting { blocks, inner, .. } => {
                let per_count: Result<Vec<ExactRational>, AmqError> = (0..=inserts)
                    .map(|i| bloom_false_positive(inner, i))
                    .collect();
                let per_count = per_count?;
                Ok(blocked_false_positive(*blocks, inserts, |i| {
                    per_count[i as usize].clone()
                }))
            }
            StructureSpec::BlockedQuotient { blocks, inner } => {
                Ok(blocked_false_positive(*blocks, inserts, |i| {
                    quotient_false_positive(inner, i)
                }))
            }
        }
    }

    /// Float-mode false-positive value, defined at every scale.
    pub fn float_fp(&self, inserts: u64) -> f64 {
        match self {
            StructureSpec::Bloom(p) | StructureSpec::Counting { inner: p, .. } => {
                bloom_false_positive_float(p, inserts)
            }
            StructureSpec::Quotient(p) => to_float(&quotient_false_positive(p, inserts)),
            StructureSpec::BlockedBloom { blocks, inner }
            | StructureSpec::BlockedCounting { blocks, inner, .. } => {
                blocked_false_positive_float(*blocks, inserts, |i| {
                    bloom_false_positive_float(inner, i)
                })
            }
            StructureSpec::BlockedQuotient { blocks, inner } => {
                blocked_false_positive_float(*blocks, inserts, |i| {
                    to_float(&quotient_false_positive(inner, i))
                })
            }
        }
    }

    /// The historically incorrect classic Bloom approximation, for the
    /// structures it speaks about (the Bloom family).
    pub fn classic_float(&self, inserts: u64) -> Option<f64> {
        match self {
            StructureSpec::Bloom(p) | StructureSpec::Counting { inner: p, .. } => {
                Some(classic_value(p, inserts))
            }
            _ => None,
        }
    }

    pub fn classic_exact(&self, inserts: u64) -> Option<ExactRational> {
        match self {
            StructureSpec::Bloom(p) | StructureSpec::Counting { inner: p, .. } => {
                Some(bloom_classic_bound(p, inserts))
            }
            _ => None,
        }
    }

    /// Whether the fresh structure can absorb `inserts` inserts at all
    /// (counting bounds can rule a run out before it starts).
    pub fn supports_inserts(&self, inserts: u64) -> bool {
        match self {
            StructureSpec::Counting { inner, bound }
            | StructureSpec::BlockedCounting { inner, bound, .. } => {
                inner.hashes.saturating_mul(inserts) <= *bound
            }
            _ => true,
        }
    }

    /// Brute-force enumeration of the false-positive probability.
    pub fn oracle_fp(&self, inserts: u64) -> Result<ExactRational, AmqError> {
        match self {
            StructureSpec::Bloom(p) => {
                let (bits, hashes) = (p.bits, p.hashes);
                oracle_fp(
                    move || {
                        (
                            HashVector::new(hashes, bits).expect("valid params"),
                            BloomState::new(bits).expect("valid params"),
                        )
                    },
                    inserts,
                )
            }
            StructureSpec::Counting { inner, bound } => {
                let (bits, hashes, bound) = (inner.bits, inner.hashes, *bound);
                oracle_fp(
                    move || {
                        (
                            HashVector::new(hashes, bits).expect("valid params"),
                            CountingState::new(bits, bound, hashes).expect("valid params"),
                        )
                    },
                    inserts,
                )
            }
            StructureSpec::Quotient(p) => {
                let (q, r, domain) = (p.quotient_bits, p.remainder_bits, p.domain_size());
                oracle_fp(
                    move || {
                        (
                            HashState::new(domain).expect("valid params"),
                            QuotientState::new(q, r).expect("valid params"),
                        )
                    },
                    inserts,
                )
            }
            StructureSpec::BlockedBloom { blocks, inner } => {
                let (blocks, bits, hashes) = (*blocks, inner.bits, inner.hashes);
                oracle_fp(
                    move || {
                        (
                            MultiplexedHash::new(
                                blocks,
                                HashVector::new(hashes, bits).expect("valid params"),
                            )
                            .expect("valid params"),
                            BlockedState::new(blocks, BloomState::new(bits).expect("valid params"))
                                .expect("valid params"),
                        )
                    },
                    inserts,
                )
            }
            StructureSpec::BlockedCounting {
                blocks,
                inner,
                bound,
            } => {
                let (blocks, bits, hashes, bound) = (*blocks, inner.bits, inner.hashes, *bound);
                oracle_fp(
                    move || {
                        (
                            MultiplexedHash::new(
                                blocks,
                                HashVector::new(hashes, bits).expect("valid params"),
                            )
                            .expect("valid params"),
                            BlockedState::new(
                                blocks,
                                CountingState::new(bits, bound, hashes).expect("valid params"),
                            )
                            .expect("valid params"),
                        )
                    },
                    inserts,
                )
            }
            StructureSpec::BlockedQuotient { blocks, inner } => {
                let (blocks, q, r, domain) = (
                    *blocks,
                    inner.quotient_bits,
                    inner.remainder_bits,
                    inner.domain_size(),
                );
                oracle_fp(
                    move || {
                        (
                            MultiplexedHash::new(
                                blocks,
                                HashState::new(domain).expect("valid params"),
                            )
                            .expect("valid params"),
                            BlockedState::new(
                                blocks,
                                QuotientState::new(q, r).expect("valid params"),
                            )
                            .expect("valid params"),
                        )
                    },
                    inserts,
                )
            }
        }
    }

    /// Seeded Monte-Carlo estimate against the exact analytic value.
    pub fn simulate(
        &self,
        inserts: u64,
        trials: u64,
        seed: u64,
        z: f64,
    ) -> Result<SimulationReport, AmqError> {
        let analytic = self.exact_fp(inserts)?;
        let name = self.name();
        let params = self.params_json();
        let report = match self {
            StructureSpec::Bloom(p) => {
                let (bits, hashes) = (p.bits, p.hashes);
                estimate_fp(
                    move || {
                        (
                            HashVector::new(hashes, bits).expect("valid params"),
                            BloomState::new(bits).expect("valid params"),
                        )
                    },
                    inserts,
                    trials,
                    seed,
                    z,
                    &analytic,
                    name,
                    params,
                )
            }
            StructureSpec::Counting { inner, bound } => {
                let (bits, hashes, bound) = (inner.bits, inner.hashes, *bound);
                estimate_fp(
                    move || {
                        (
                            HashVector::new(hashes, bits).expect("valid params"),
                            CountingState::new(bits, bound, hashes).expect("valid params"),
                        )
                    },
                    inserts,
                    trials,
                    seed,
                    z,
                    &analytic,
                    name,
                    params,
                )
            }
            StructureSpec::Quotient(p) => {
                let (q, r, domain) = (p.quotient_bits, p.remainder_bits, p.domain_size());
                estimate_fp(
                    move || {
                        (
                            HashState::new(domain).expect("valid params"),
                            QuotientState::new(q, r).expect("valid params"),
                        )
                    },
                    inserts,
                    trials,
                    seed,
                    z,
                    &analytic,
                    name,
                    params,
                )
            }
            StructureSpec::BlockedBloom { blocks, inner } => {
                let (blocks, bits, hashes) = (*blocks, inner.bits, inner.hashes);
                estimate_fp(
                    move || {
                        (
                            MultiplexedHash::new(
                                blocks,
                                HashVector::new(hashes, bits).expect("valid params"),
                            )
                            .expect("valid params"),
                            BlockedState::new(blocks, BloomState::new(bits).expect("valid params"))
                                .expect("valid params"),
                        )
                    },
                    inserts,
                    trials,
                    seed,
                    z,
                    &analytic,
                    name,
                    params,
                )
            }
            StructureSpec::BlockedCounting {
                blocks,
                inner,
                bound,
            } => {
                let (blocks, bits, hashes, bound) = (*blocks, inner.bits, inner.hashes, *bound);
                estimate_fp(
                    move || {
                        (
                            MultiplexedHash::new(
                                blocks,
                                HashVector::new(hashes, bits).expect("valid params"),
                            )
                            .expect("valid params"),
                            BlockedState::new(
                                blocks,
                                CountingState::new(bits, bound, hashes).expect("valid params"),
                            )
                            .expect("valid params"),
                        )
                    },
                    inserts,
                    trials,
                    seed,
                    z,
                    &analytic,
                    name,
                    params,
                )
            }
            StructureSpec::BlockedQuotient { blocks, inner } => {
                let (blocks, q, r, domain) = (
                    *blocks,
                    inner.quotient_bits,
                    inner.remainder_bits,
                    inner.domain_size(),
                );
                estimate_fp(
                    move || {
                        (
                            MultiplexedHash::new(
                                blocks,
                                HashState::new(domain).expect("valid params"),
                            )
                            .expect("valid params"),
                            BlockedState::new(
                                blocks,
                                QuotientState::new(q, r).expect("valid params"),
                            )
                            .expect("valid params"),
                        )
                    },
                    inserts,
                    trials,
                    seed,
                    z,
                    &analytic,
                    name,
                    params,
                )
            }
        };
        Ok(report)
    }

    /// Interface-law suite for this structure.
    pub fn conformance(&self, scenarios: u64, seed: u64) -> Vec<LawReport> {
        match self {
            StructureSpec::Bloom(p) => conformance::bloom_suite(p.bits, p.hashes, scenarios, seed),
            StructureSpec::Counting { inner, bound } => {
                conformance::counting_suite(inner.bits, inner.hashes, *bound, scenarios, seed)
            }
            StructureSpec::Quotient(p) => {
                conformance::quotient_suite(p.quotient_bits, p.remainder_bits, scenarios, seed)
            }
            StructureSpec::BlockedBloom { blocks, inner } => {
                conformance::blocked_bloom_suite(*blocks, inner.bits, inner.hashes, scenarios, seed)
            }
            StructureSpec::BlockedCounting {
                blocks,
                inner,
                bound,
            } => conformance::blocked_counting_suite(
                *blocks,
                inner.bits,
                inner.hashes,
                *bound,
                scenarios,
                seed,
            ),
            StructureSpec::BlockedQuotient { blocks, inner } => {
                conformance::blocked_quotient_suite(
                    *blocks,
                    inner.quotient_bits,
                    inner.remainder_bits,
                    scenarios,
                    seed,
                )
            }
        }
    }
}

fn classic_value(params: &BloomParams, inserts: u64) -> f64 {
    let draws = params.hashes * inserts;
    if params.bits <= amq_core::analytic::EXACT_MAX_BITS
        && draws <= amq_core::analytic::EXACT_MAX_DRAWS
    {
        to_float(&bloom_classic_bound(params, inserts))
    } else {
        let miss = 1.0 - 1.0 / params.bits as f64;
        (1.0 - miss.powf(draws as f64)).powf(params.hashes as f64)
    }
}

/// Default parameter sets used when `conformance` is asked to cover every
/// shipped structure.
pub fn default_conformance_specs() -> Vec<StructureSpec> {
    vec![
        StructureSpec::Bloom(BloomParams::new(32, 3).unwrap()),
        StructureSpec::Counting {
            inner: BloomParams::new(32, 3).unwrap(),
            bound: 64,
        },
        StructureSpec::Quotient(QuotientParams::new(3, 5).unwrap()),
        StructureSpec::BlockedBloom {
            blocks: 4,
            inner: BloomParams::new(32, 3).unwrap(),
        },
        StructureSpec::BlockedCounting {
            blocks: 4,
            inner: BloomParams::new(32, 3).unwrap(),
            bound: 64,
        },
        StructureSpec::BlockedQuotient {
            blocks: 4,
            inner: QuotientParams::new(3, 5).unwrap(),
        },
    ]
}
