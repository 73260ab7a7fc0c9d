//! The two verification engines.
//!
//! The *enumeration oracle* computes event probabilities exactly by visiting
//! every assignment of the uniform draws a scenario makes. Draw points are
//! discovered lazily: the scenario runs against a scripted source that
//! records each fresh draw's domain, and an odometer then walks the whole
//! outcome tree, replaying the scenario once per assignment. Seen keys
//! consume no draws, so a scenario that re-hashes a known key enumerates
//! nothing extra for it.
//!
//! The *Monte-Carlo estimator* replays a scenario under derived per-trial
//! seed streams and reports a Wilson score interval next to the analytic
//! value it is checking.

use crate::amq::{amq_addm, amq_query, Amq};
use crate::exact::{format_ratio, to_float, ExactRational};
use crate::hashing::{DrawSource, HashLayer, Key, Rng};
use crate::AmqError;
use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Hard cap on the number of outcome assignments the oracle will visit.
pub const ENUMERATION_LIMIT: u128 = 1 << 25;

/// Replays a fixed script of draw values, extending itself with zeros (and
/// recording the domain) whenever the scenario asks for a draw beyond the
/// script's end.
struct ScriptedSource {
    path: Vec<(u64, u64)>, // (value, domain)
    position: usize,
}

impl ScriptedSource {
    fn resume(path: Vec<(u64, u64)>) -> Self {
        ScriptedSource { path, position: 0 }
    }

    fn into_path(self) -> Vec<(u64, u64)> {
        self.path
    }
}

impl DrawSource for ScriptedSource {
    fn draw(&mut self, domain: u64) -> u64 {
        assert!(domain >= 1, "draw domain must be at least 1");
        if domain == 1 {
            return 0;
        }
        if self.position == self.path.len() {
            self.path.push((0, domain));
        } else {
            // Prefix values are unchanged, so the replayed program must
            // request the same domain at each scripted position.
            debug_assert_eq!(
                self.path[self.position].1, domain,
                "scenario drew inconsistent domains across replays"
            );
        }
        let value = self.path[self.position].0;
        self.position += 1;
        value
    }
}

/// Moves to the next assignment in lexicographic order; false when the
/// whole tree has been visited.
fn advance(path: &mut Vec<(u64, u64)>) -> bool {
    while let Some((value, domain)) = path.pop() {
        if value + 1 < domain {
            path.push((value + 1, domain));
            return true;
        }
    }
    false
}

/// Shape of a scenario's outcome space: the fresh uniform draws it makes
/// (on its all-zeros path) and the product of their domains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeEnumeration {
    pub draw_count: usize,
    pub domain_sizes: Vec<u64>,
    pub total: u128,
}

impl OutcomeEnumeration {
    pub fn discover<T>(mut scenario: impl FnMut(&mut dyn DrawSource) -> T) -> Self {
        let mut source = ScriptedSource::resume(Vec::new());
        let _ = scenario(&mut source);
        let path = source.into_path();
        let domain_sizes: Vec<u64> = path.iter().map(|&(_, domain)| domain).collect();
        let total = domain_sizes
            .iter()
            .fold(1u128, |acc, &domain| acc.saturating_mul(domain as u128));
        OutcomeEnumeration {
            draw_count: domain_sizes.len(),
            domain_sizes,
            total,
        }
    }
}

/// Exact probability that `event` holds on the scenario's result, summed
/// over every equally weighted assignment of its uniform draws.
pub fn oracle_probability<T>(
    mut scenario: impl FnMut(&mut dyn DrawSource) -> T,
    mut event: impl FnMut(&T) -> bool,
) -> Result<ExactRational, AmqError> {
    let mut path: Vec<(u64, u64)> = Vec::new();
    // Leaf weights are 1/(product of domains on the leaf's path); group
    // leaves by that product and divide once at the end.
    let mut hits: HashMap<u128, u64> = HashMap::new();
    let mut leaves: u128 = 0;
    loop {
        let mut source = ScriptedSource::resume(std::mem::take(&mut path));
        let result = scenario(&mut source);
        path = source.into_path();

        // One path's domain product is this leaf's weight denominator; for
        // a uniform-depth scenario it also equals the total leaf count, so
        // oversized enumerations are refused on the very first replay.
        let weight_denominator = path
            .iter()
            .try_fold(1u128, |acc, &(_, domain)| acc.checked_mul(domain as u128))
            .unwrap_or(u128::MAX);
        if weight_denominator > ENUMERATION_LIMIT {
            return Err(AmqError::EnumerationTooLarge {
                total: weight_denominator,
                limit: ENUMERATION_LIMIT,
            });
        }
        leaves += 1;
        if leaves > ENUMERATION_LIMIT {
            return Err(AmqError::EnumerationTooLarge {
                total: leaves,
                limit: ENUMERATION_LIMIT,
            });
        }
        if event(&result) {
            *hits.entry(weight_denominator).or_insert(0) += 1;
        }
        if !advance(&mut path) {
            break;
        }
    }
    let mut probability = ExactRational::zero();
    for (denominator, count) in hits {
        probability += ExactRational::new(BigInt::from(count), BigInt::from(denominator));
    }
    Ok(probability)
}

/// Oracle false-positive probability of a filter: insert `inserts` distinct
/// unseen keys through the wrapper, then query one further unseen key.
pub fn oracle_fp<H, A>(
    make_fresh: impl Fn() -> (H, A),
    inserts: u64,
) -> Result<ExactRational, AmqError>
where
    H: HashLayer,
    A: Amq<Output = H::Output>,
{
    let keys: Vec<Key> = (0..inserts).collect();
    oracle_probability(
        move |src| {
            let (layer, state) = make_fresh();
            let (layer, state) =
                amq_addm(&keys, &layer, &state, src).expect("oracle scenario within capacity");
            let (_, verdict) = amq_query(inserts, &layer, &state, src);
            verdict
        },
        |&verdict| verdict,
    )
}

/// Wilson score interval for `successes` out of `trials` at `z` sigmas.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials >= 1, "wilson interval needs at least one trial");
    assert!(successes <= trials);
    assert!(z > 0.0);
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denominator = 1.0 + z2 / n;
    let center = phat + z2 / (2.0 * n);
    let margin = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((center - margin) / denominator).max(0.0),
        ((center + margin) / denominator).min(1.0),
    )
}

/// One Monte-Carlo run next to its analytic reference. `estimate` and the
/// interval are computed over the non-aborted trials only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub structure: String,
    pub params: serde_json::Value,
    #[serde(rename = "l")]
    pub inserts: u64,
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub analytic_exact: String,
    pub analytic_float: f64,
    pub z: f64,
    pub aborted_trials: u64,
}

impl SimulationReport {
    pub fn analytic_within_band(&self) -> bool {
        self.ci_low <= self.analytic_float && self.analytic_float <= self.ci_high
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `count` distinct keys drawn from the stream.
pub fn distinct_keys(rng: &mut Rng, count: u64) -> Vec<Key> {
    let mut keys: Vec<Key> = Vec::with_capacity(count as usize);
    while (keys.len() as u64) < count {
        let candidate = rng.next_u64();
        if !keys.contains(&candidate) {
            keys.push(candidate);
        }
    }
    keys
}

/// Estimates the false-positive rate over seeded trials: each trial gets its
/// own derived stream, a fresh filter and hash layer, `inserts` distinct
/// keys, and one query of a further unseen key. Capacity aborts are counted
/// separately and excluded from the estimate.
#[allow(clippy::too_many_arguments)]
pub fn estimate_fp<H, A>(
    make_fresh: impl Fn() -> (H, A),
    inserts: u64,
    trials: u64,
    seed: u64,
    z: f64,
    analytic: &ExactRational,
    structure: &str,
    params: serde_json::Value,
) -> SimulationReport
where
    H: HashLayer,
    A: Amq<Output = H::Output>,
{
    assert!(trials >= 1, "need at least one trial");
    let mut successes = 0u64;
    let mut aborted = 0u64;
    for trial in 0..trials {
        let mut rng = Rng::stream(seed, trial);
        let keys = distinct_keys(&mut rng, inserts + 1);
        let (layer, state) = make_fresh();
        match amq_addm(&keys[..inserts as usize], &layer, &state, &mut rng) {
            Ok((layer, state)) => {
                let (_, verdict) = amq_query(keys[inserts as usize], &layer, &state, &mut rng);
                if verdict {
                    successes += 1;
                }
            }
            Err(AmqError::CapacityExceeded { .. }) | Err(AmqError::CounterSaturation { .. }) => {
                aborted += 1;
            }
            Err(other) => panic!("unexpected trial failure: {other}"),
        }
    }
    let effective = trials - aborted;
    let (estimate, ci_low, ci_high) = if effective >= 1 {
        let (low, high) = wilson_interval(successes, effective, z);
        (successes as f64 / effective as f64, low, high)
    } else {
        (0.0, 0.0, 1.0)
    };
    SimulationReport {
        structure: structure.to_string(),
        params,
        inserts,
        trials,
        seed,
        successes,
        estimate,
        ci_low,
        ci_high,
        analytic_exact: format_ratio(analytic),
        analytic_float: to_float(analytic),
        z,
        aborted_trials: aborted,
    }
}

/// A no-false-negatives failure: the offending trial and its key material.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NfnFailure {
    pub trial: u64,
    pub seed: u64,
    pub target_key: Key,
    pub other_keys: Vec<Key>,
}

/// Result of a seeded no-false-negatives sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NfnReport {
    pub trials: u64,
    pub rejected_trials: u64,
    pub failures: Vec<NfnFailure>,
}

impl NfnReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Per trial: insert a target key, then `inserts` others, then query the
/// target; any `false` verdict is recorded with its trial seed and keys.
pub fn check_no_false_negatives<H, A>(
    make_fresh: impl Fn() -> (H, A),
    inserts: u64,
    trials: u64,
    seed: u64,
) -> NfnReport
where
    H: HashLayer,
    A: Amq<Output = H::Output>,
{
    let mut failures = Vec::new();
    let mut rejected = 0u64;
    for trial in 0..trials {
        let mut rng = Rng::stream(seed, trial);
        let keys = distinct_keys(&mut rng, inserts + 1);
        let target = keys[0];
        let (layer, state) = make_fresh();
        let run = amq_addm(&keys, &layer, &state, &mut rng);
        let (layer, state) = match run {
            Ok(pair) => pair,
            Err(AmqError::CapacityExceeded { .. }) | Err(AmqError::CounterSaturation { .. }) => {
                rejected += 1;
                continue;
            }
            Err(other) => panic!("unexpected trial failure: {other}"),
        };
        let (_, verdict) = amq_query(target, &layer, &state, &mut rng);
        if !verdict {
            failures.push(NfnFailure {
                trial,
                seed,
                target_key: target,
                other_keys: keys[1..].to_vec(),
            });
        }
    }
    NfnReport {
        trials,
        rejected_trials: rejected,
        failures,
    }
}
