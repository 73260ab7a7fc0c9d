//! Per-structure conformance suites: every shipped filter is run against
//! the interface laws (insertion validity, query preservation, no false
//! negatives) over randomized states, and the counting filter additionally
//! against its removal, counter-sum and Bloom-reduction laws. The CLI's
//! `conformance` command and the acceptance tests both drive these.

use crate::amq::{
    amq_add, amq_query, check_amq_map, check_insertion_validity, check_query_preservation, Amq,
    LawResult,
};
use crate::blocked::BlockedState;
use crate::bloom::BloomState;
use crate::counting::CountingState;
use crate::harness::{check_no_false_negatives, distinct_keys};
use crate::hashing::{
    DrawSource, HashLayer, HashOutput, HashState, HashVector, MultiplexedHash, Rng,
};
use crate::quotient::QuotientState;

/// One law verdict, with a counterexample trace on failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LawReport {
    pub structure: String,
    pub law: String,
    pub passed: bool,
    pub detail: String,
}

impl LawReport {
    fn from_result(structure: &str, law: &str, result: LawResult) -> Self {
        // A precondition rejection (typically: no capacity) means the law
        // was not exercised; it is reported, but it is not a failure.
        let (passed, detail) = match result {
            LawResult::Holds => (true, "holds".to_string()),
            LawResult::Rejected(err) => (true, format!("scenario rejected, not a failure: {err}")),
            LawResult::Violated(trace) => (false, trace),
        };
        LawReport {
            structure: structure.to_string(),
            law: law.to_string(),
            passed,
            detail,
        }
    }
}

/// Random already-populated states paired with a fresh random output.
fn random_cases<A: Amq>(
    fresh: &A,
    random_output: &impl Fn(&mut Rng) -> A::Output,
    scenarios: u64,
    seed: u64,
    max_prefill: u64,
) -> Vec<(A, A::Output)> {
    (0..scenarios)
        .map(|i| {
            let mut rng = Rng::stream(seed, i);
            let mut state = fresh.clone();
            for _ in 0..rng.draw(max_prefill + 1) {
                if !state.available_capacity(1) {
                    break;
                }
                state = state
                    .add_internal(&random_output(&mut rng))
                    .expect("add within capacity");
            }
            let output = random_output(&mut rng);
            (state, output)
        })
        .collect()
}

/// Like [`random_cases`] but also picks a value to query: half the time one
/// that was actually inserted, so the preservation check is not vacuous.
fn random_preservation_cases<A: Amq>(
    fresh: &A,
    random_output: &impl Fn(&mut Rng) -> A::Output,
    scenarios: u64,
    seed: u64,
    max_prefill: u64,
) -> Vec<(A, A::Output, A::Output)> {
    (0..scenarios)
        .map(|i| {
            let mut rng = Rng::stream(seed ^ 0x5EED, i);
            let mut state = fresh.clone();
            let mut inserted = Vec::new();
            for _ in 0..rng.draw(max_prefill + 1) {
                if !state.available_capacity(1) {
                    break;
                }
                let output = random_output(&mut rng);
                state = state.add_internal(&output).expect("add within capacity");
                inserted.push(output);
            }
            let queried = if !inserted.is_empty() && rng.draw(2) == 1 {
                inserted[rng.draw(inserted.len() as u64) as usize].clone()
            } else {
                random_output(&mut rng)
            };
            (state, queried, random_output(&mut rng))
        })
        .collect()
}

fn basic_laws<H, A>(
    structure: &str,
    make_fresh: impl Fn() -> (H, A),
    random_output: impl Fn(&mut Rng) -> A::Output,
    nfn_inserts: u64,
    scenarios: u64,
    seed: u64,
    max_prefill: u64,
) -> Vec<LawReport>
where
    H: HashLayer,
    A: Amq<Output = H::Output> + std::fmt::Debug,
{
    let (_, fresh) = make_fresh();
    let insertion = check_insertion_validity(&random_cases(
        &fresh,
        &random_output,
        scenarios,
        seed,
        max_prefill,
    ));
    let preservation = check_query_preservation(&random_preservation_cases(
        &fresh,
        &random_output,
        scenarios,
        seed,
        max_prefill,
    ));
    let nfn = check_no_false_negatives(&make_fresh, nfn_inserts, scenarios, seed);
    let nfn_report = LawReport {
        structure: structure.to_string(),
        law: "no false negatives".to_string(),
        passed: nfn.passed(),
        detail: match nfn.failures.first() {
            None => format!(
                "holds over {} trials ({} rejected for capacity)",
                nfn.trials, nfn.rejected_trials
            ),
            Some(failure) => format!(
                "trial {} (seed {}): query for {} returned false after inserting {:?}",
                failure.trial, failure.seed, failure.target_key, failure.other_keys
            ),
        },
    };
    vec![
        LawReport::from_result(structure, "insertion validity", insertion),
        LawReport::from_result(structure, "query preservation", preservation),
        nfn_report,
    ]
}

fn random_indices(hashes: u64, bits: u64) -> impl Fn(&mut Rng) -> Vec<HashOutput> {
    move |rng| {
        (0..hashes)
            .map(|_| HashOutput::new(rng.draw(bits), bits))
            .collect()
    }
}

pub fn bloom_suite(bits: u64, hashes: u64, scenarios: u64, seed: u64) -> Vec<LawReport> {
    let make = move || {
        (
            HashVector::new(hashes, bits).expect("valid params"),
            BloomState::new(bits).expect("valid params"),
        )
    };
    basic_laws(
        "bloom",
        make,
        random_indices(hashes, bits),
        8,
        scenarios,
        seed,
        24,
    )
}

pub fn quotient_suite(
    quotient_bits: u32,
    remainder_bits: u32,
    scenarios: u64,
    seed: u64,
) -> Vec<LawReport> {
    let domain = 1u64 << (quotient_bits + remainder_bits);
    let make = move || {
        (
            HashState::new(domain).expect("valid params"),
            QuotientState::new(quotient_bits, remainder_bits).expect("valid params"),
        )
    };
    let random_output = move |rng: &mut Rng| HashOutput::new(rng.draw(domain), domain);
    basic_laws("quotient", make, random_output, 8, scenarios, seed, 24)
}

pub fn counting_suite(
    bits: u64,
    hashes: u64,
    bound: u64,
    scenarios: u64,
    seed: u64,
) -> Vec<LawReport> {
    let make = move || {
        (
            HashVector::new(hashes, bits).expect("valid params"),
            CountingState::new(bits, bound, hashes).expect("valid params"),
        )
    };
    // Prefill must leave room for the laws' one further insert.
    let max_prefill = (bound / hashes).saturating_sub(2).min(16);
    let mut reports = basic_laws(
        "counting",
        make,
        random_indices(hashes, bits),
        (bound / hashes).saturating_sub(1).min(8),
        scenarios,
        seed,
        max_prefill,
    );
    reports.push(counting_removal_law(bits, hashes, bound, scenarios, seed));
    reports.push(counting_increment_law(bits, hashes, bound, scenarios, seed));
    reports.extend(counting_map_laws(
        bits,
        hashes,
        bound,
        scenarios,
        seed,
        max_prefill,
    ));
    reports.push(counting_bloom_trace_equality(
        bits, hashes, bound, scenarios, seed,
    ));
    reports
}

/// `add x'; add x; remove x'; query x` answers true on every seed.
pub fn counting_removal_law(
    bits: u64,
    hashes: u64,
    bound: u64,
    scenarios: u64,
    seed: u64,
) -> LawReport {
    let mut failure = None;
    let mut rejected = 0u64;
    for trial in 0..scenarios {
        let mut rng = Rng::stream(seed ^ 0xCF00D, trial);
        let keys = distinct_keys(&mut rng, 2);
        let (removed_key, kept_key) = (keys[0], keys[1]);
        let layer = HashVector::new(hashes, bits).expect("valid params");
        let state = CountingState::new(bits, bound, hashes).expect("valid params");
        let run = amq_add(removed_key, &layer, &state, &mut rng)
            .and_then(|(layer, state)| amq_add(kept_key, &layer, &state, &mut rng));
        let (layer, state) = match run {
            Ok(pair) => pair,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        // The layer already knows the removed key, so this hash is a pure
        // (draw-free) lookup of its recorded outputs.
        let (layer, outputs) = layer.hash(removed_key, &mut rng);
        let state = state.remove_internal(&outputs).expect("counters positive");
        let (_, verdict) = amq_query(kept_key, &layer, &state, &mut rng);
        if !verdict {
            failure = Some(format!(
                "trial {trial}: query for {kept_key} false after removing {removed_key}"
            ));
            break;
        }
    }
    LawReport {
        structure: "counting".to_string(),
        law: "removal keeps other queries".to_string(),
        passed: failure.is_none(),
        detail: failure.unwrap_or_else(|| {
            format!("holds over {scenarios} trials ({rejected} rejected for capacity)")
        }),
    }
}

/// Inserting one unseen key raises the counter sum by exactly the hash
/// count, on every seed.
pub fn counting_increment_law(
    bits: u64,
    hashes: u64,
    bound: u64,
    scenarios: u64,
    seed: u64,
) -> LawReport {
    let mut failure = None;
    let mut rejected = 0u64;
    for trial in 0..scenarios {
        let mut rng = Rng::stream(seed ^ 0xC0117, trial);
        let layer = HashVector::new(hashes, bits).expect("valid params");
        let state = CountingState::new(bits, bound, hashes).expect("valid params");
        let before = state.counter_sum();
        let state = match amq_add(rng.next_u64(), &layer, &state, &mut rng) {
            Ok((_, state)) => state,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        let after = state.counter_sum();
        if after != before + hashes {
            failure = Some(format!(
                "trial {trial}: counter sum went {before} -> {after}, expected +{hashes}"
            ));
            break;
        }
    }
    LawReport {
        structure: "counting".to_string(),
        law: "insert raises counter sum by hash count".to_string(),
        passed: failure.is_none(),
        detail: failure.unwrap_or_else(|| {
            format!("holds over {scenarios} trials ({rejected} rejected for capacity)")
        }),
    }
}

/// The counter->bit collapse commutes with add and preserves queries.
pub fn counting_map_laws(
    bits: u64,
    hashes: u64,
    bound: u64,
    scenarios: u64,
    seed: u64,
    max_prefill: u64,
) -> Vec<LawReport> {
    let fresh = CountingState::new(bits, bound, hashes).expect("valid params");
    let cases = random_cases(
        &fresh,
        &random_indices(hashes, bits),
        scenarios,
        seed ^ 0x3A9,
        max_prefill,
    );
    let result = check_amq_map(|state: &CountingState| state.to_bloom(), &cases);
    vec![LawReport::from_result(
        "counting",
        "bloom reduction (add commutes, query preserved)",
        result,
    )]
}

/// Under identical seeds a counting filter and a Bloom filter answer every
/// query identically, and the collapsed counting state tracks the Bloom
/// state step for step.
pub fn counting_bloom_trace_equality(
    bits: u64,
    hashes: u64,
    bound: u64,
    scenarios: u64,
    seed: u64,
) -> LawReport {
    let inserts = (bound / hashes).saturating_sub(1).min(6);
    let mut failure = None;
    'outer: for trial in 0..scenarios {
        let mut counting_rng = Rng::stream(seed ^ 0x7ACE, trial);
        let mut bloom_rng = Rng::stream(seed ^ 0x7ACE, trial);
        let keys = distinct_keys(&mut counting_rng, inserts + 1);
        let _ = distinct_keys(&mut bloom_rng, inserts + 1); // keep streams aligned
        let mut counting_layer = HashVector::new(hashes, bits).expect("valid params");
        let mut bloom_layer = counting_layer.clone();
        let mut counting = CountingState::new(bits, bound, hashes).expect("valid params");
        let mut bloom = BloomState::new(bits).expect("valid params");
        for (step, &key) in keys[..inserts as usize].iter().enumerate() {
            (counting_layer, counting) =
                amq_add(key, &counting_layer, &counting, &mut counting_rng).expect("capacity");
            (bloom_layer, bloom) =
                amq_add(key, &bloom_layer, &bloom, &mut bloom_rng).expect("capacity");
            if counting.to_bloom() != bloom {
                failure = Some(format!(
                    "trial {trial}, step {step}: collapsed counting state diverged from bloom"
                ));
                break 'outer;
            }
        }
        let query_key = keys[inserts as usize];
        let (_, counting_verdict) =
            amq_query(query_key, &counting_layer, &counting, &mut counting_rng);
        let (_, bloom_verdict) = amq_query(query_key, &bloom_layer, &bloom, &mut bloom_rng);
        if counting_verdict != bloom_verdict {
            failure = Some(format!(
                "trial {trial}: query verdicts diverged ({counting_verdict} vs {bloom_verdict})"
            ));
            break;
        }
    }
    LawReport {
        structure: "counting".to_string(),
        law: "query trace equals bloom under identical seeds".to_string(),
        passed: failure.is_none(),
        detail: failure.unwrap_or_else(|| format!("holds over {scenarios} trials")),
    }
}

pub fn blocked_bloom_suite(
    blocks: u64,
    bits: u64,
    hashes: u64,
    scenarios: u64,
    seed: u64,
) -> Vec<LawReport> {
    let make = move || {
        let inner_layer = HashVector::new(hashes, bits).expect("valid params");
        let layer = MultiplexedHash::new(blocks, inner_layer).expect("valid params");
        let state = BlockedState::new(blocks, BloomState::new(bits).expect("valid params"))
            .expect("valid params");
        (layer, state)
    };
    let indices = random_indices(hashes, bits);
    let random_output =
        move |rng: &mut Rng| (HashOutput::new(rng.draw(blocks), blocks), indices(rng));
    basic_laws("blocked-bloom", make, random_output, 8, scenarios, seed, 24)
}

pub fn blocked_counting_suite(
    blocks: u64,
    bits: u64,
    hashes: u64,
    bound: u64,
    scenarios: u64,
    seed: u64,
) -> Vec<LawReport> {
    let make = move || {
        let inner_layer = HashVector::new(hashes, bits).expect("valid params");
        let layer = MultiplexedHash::new(blocks, inner_layer).expect("valid params");
        let state = BlockedState::new(
            blocks,
            CountingState::new(bits, bound, hashes).expect("valid params"),
        )
        .expect("valid params");
        (layer, state)
    };
    let indices = random_indices(hashes, bits);
    let random_output =
        move |rng: &mut Rng| (HashOutput::new(rng.draw(blocks), blocks), indices(rng));
    let max_prefill = (bound / hashes).saturating_sub(2).min(16);
    basic_laws(
        "blocked-counting",
        make,
        random_output,
        (bound / hashes).saturating_sub(1).min(8),
        scenarios,
        seed,
        max_prefill,
    )
}

pub fn blocked_quotient_suite(
    blocks: u64,
    quotient_bits: u32,
    remainder_bits: u32,
    scenarios: u64,
    seed: u64,
) -> Vec<LawReport> {
    let domain = 1u64 << (quotient_bits + remainder_bits);
    let make = move || {
        let inner_layer = HashState::new(domain).expect("valid params");
        let layer = MultiplexedHash::new(blocks, inner_layer).expect("valid params");
        let state = BlockedState::new(
            blocks,
            QuotientState::new(quotient_bits, remainder_bits).expect("valid params"),
        )
        .expect("valid params");
        (layer, state)
    };
    let random_output = move |rng: &mut Rng| {
        (
            HashOutput::new(rng.draw(blocks), blocks),
            HashOutput::new(rng.draw(domain), domain),
        )
    };
    basic_laws(
        "blocked-quotient",
        make,
        random_output,
        8,
        scenarios,
        seed,
        24,
    )
}
