//! Exact agreement between the enumeration oracle and the closed forms on
//! small parameter grids. The full-size grids run in the acceptance suite;
//! these stay small enough to be part of every test run.

use amq_core::analytic::{
    blocked_false_positive, bloom_bit_set_prob, bloom_false_positive, quotient_false_positive,
    BloomParams, QuotientParams,
};
use amq_core::blocked::BlockedState;
use amq_core::bloom::BloomState;
use amq_core::exact::{pow_rat, ratio, ExactRational};
use amq_core::harness::{oracle_fp, oracle_probability};
use amq_core::hashing::{HashLayer, HashOutput, HashState, HashVector, Key, MultiplexedHash};
use amq_core::quotient::QuotientState;
use amq_core::{amq_addm, amq_query};
use num_traits::One;

fn bloom_fresh(bits: u64, hashes: u64) -> impl Fn() -> (HashVector, BloomState) {
    move || {
        (
            HashVector::new(hashes, bits).unwrap(),
            BloomState::new(bits).unwrap(),
        )
    }
}

#[test]
fn bloom_fp_matches_closed_form() {
    for bits in 1..=3u64 {
        for hashes in 1..=2u64 {
            for inserts in 0..=3u64 {
                let params = BloomParams::new(bits, hashes).unwrap();
                let oracle = oracle_fp(bloom_fresh(bits, hashes), inserts).unwrap();
                let analytic = bloom_false_positive(&params, inserts).unwrap();
                assert_eq!(oracle, analytic, "m={bits} k={hashes} l={inserts}");
            }
        }
    }
}

#[test]
fn bit_set_probability_matches_closed_form() {
    for bits in 1..=3u64 {
        for hashes in 1..=2u64 {
            for inserts in 0..=2u64 {
                let params = BloomParams::new(bits, hashes).unwrap();
                let expected = bloom_bit_set_prob(&params, inserts);
                for bit in 0..bits {
                    let keys: Vec<Key> = (0..inserts).collect();
                    let oracle = oracle_probability(
                        |src| {
                            let (layer, state) = bloom_fresh(bits, hashes)();
                            let (_, state) = amq_addm(&keys, &layer, &state, src).unwrap();
                            state
                        },
                        |state| state.get(bit).unwrap(),
                    )
                    .unwrap();
                    assert_eq!(
                        oracle, expected,
                        "m={bits} k={hashes} l={inserts} bit={bit}"
                    );
                }
            }
        }
    }
}

#[test]
fn quotient_fp_matches_closed_form() {
    for quotient_bits in 0..=2u32 {
        for remainder_bits in 0..=2u32 {
            let total = quotient_bits + remainder_bits;
            if total == 0 || total > 2 {
                continue;
            }
            let params = QuotientParams::new(quotient_bits, remainder_bits).unwrap();
            for inserts in 0..=3u64 {
                let make = || {
                    (
                        HashState::new(params.domain_size()).unwrap(),
                        QuotientState::new(quotient_bits, remainder_bits).unwrap(),
                    )
                };
                let oracle = oracle_fp(make, inserts).unwrap();
                let analytic = quotient_false_positive(&params, inserts);
                assert_eq!(
                    oracle, analytic,
                    "q={quotient_bits} r={remainder_bits} l={inserts}"
                );
            }
        }
    }
}

#[test]
fn blocked_bloom_fp_matches_mixture() {
    for blocks in 1..=2u64 {
        for bits in 1..=2u64 {
            for inserts in 0..=2u64 {
                let inner = BloomParams::new(bits, 1).unwrap();
                let make = || {
                    let layer =
                        MultiplexedHash::new(blocks, HashVector::new(1, bits).unwrap()).unwrap();
                    let state = BlockedState::new(blocks, BloomState::new(bits).unwrap()).unwrap();
                    (layer, state)
                };
                let oracle = oracle_fp(make, inserts).unwrap();
                let mixture = blocked_false_positive(blocks, inserts, |i| {
                    bloom_false_positive(&inner, i).unwrap()
                });
                assert_eq!(oracle, mixture, "blocks={blocks} m={bits} l={inserts}");
            }
        }
    }
}

#[test]
fn multiplexed_hash_outputs_are_uniform() {
    // blocks=2, inner domain 2: all four (block, index) pairs at 1/4.
    for block in 0..2u64 {
        for index in 0..2u64 {
            let expected = (HashOutput::new(block, 2), HashOutput::new(index, 2));
            let p = oracle_probability(
                |src| {
                    MultiplexedHash::new(2, HashState::new(2).unwrap())
                        .unwrap()
                        .hash(5, src)
                        .1
                },
                |pair| *pair == expected,
            )
            .unwrap();
            assert_eq!(p, ratio(1, 4));
        }
    }
}

#[test]
fn hash_vector_uniformity_small_grid() {
    for domain in 1..=3u64 {
        for hashes in 1..=2u64 {
            let expected = pow_rat(&ratio(1, domain), hashes);
            // Probability of each specific output vector is (1/d)^k.
            let mut checked = 0;
            for encoded in 0..domain.pow(hashes as u32) {
                let mut wanted = Vec::new();
                let mut rest = encoded;
                for _ in 0..hashes {
                    wanted.push(HashOutput::new(rest % domain, domain));
                    rest /= domain;
                }
                let p = oracle_probability(
                    |src| HashVector::new(hashes, domain).unwrap().hash(3, src).1,
                    |outputs| *outputs == wanted,
                )
                .unwrap();
                assert_eq!(p, expected, "d={domain} k={hashes} vector={wanted:?}");
                checked += 1;
            }
            assert_eq!(checked, domain.pow(hashes as u32));
        }
    }
}

#[test]
fn blocked_single_block_equals_inner_trace() {
    // With one block the combinator must replay the inner structure move
    // for move under every seed.
    for seed in 0..200u64 {
        let mut blocked_rng = amq_core::Rng::new(seed);
        let mut inner_rng = amq_core::Rng::new(seed);
        let keys: Vec<Key> = (0..6).collect();

        let blocked_layer = MultiplexedHash::new(1, HashVector::new(2, 8).unwrap()).unwrap();
        let blocked_state = BlockedState::new(1, BloomState::new(8).unwrap()).unwrap();
        let (blocked_layer, blocked_state) =
            amq_addm(&keys, &blocked_layer, &blocked_state, &mut blocked_rng).unwrap();

        let inner_layer = HashVector::new(2, 8).unwrap();
        let inner_state = BloomState::new(8).unwrap();
        let (inner_layer, inner_state) =
            amq_addm(&keys, &inner_layer, &inner_state, &mut inner_rng).unwrap();

        assert_eq!(blocked_state.blocks()[0], inner_state, "seed {seed}");
        for query in 0..10u64 {
            let (_, blocked_verdict) = amq_query(
                query,
                &blocked_layer,
                &blocked_state,
                &mut blocked_rng.clone(),
            );
            let (_, inner_verdict) =
                amq_query(query, &inner_layer, &inner_state, &mut inner_rng.clone());
            assert_eq!(blocked_verdict, inner_verdict, "seed {seed} query {query}");
        }
    }
}

#[test]
fn oracle_total_probability_is_one_across_structures() {
    let one = ExactRational::one();
    let bloom = oracle_probability(
        |src| {
            let (layer, state) = bloom_fresh(2, 2)();
            amq_addm(&[1, 2], &layer, &state, src).unwrap()
        },
        |_| true,
    )
    .unwrap();
    assert_eq!(bloom, one);
    let quotient = oracle_probability(
        |src| {
            let layer = HashState::new(4).unwrap();
            let state = QuotientState::new(1, 1).unwrap();
            amq_addm(&[1, 2, 3], &layer, &state, src).unwrap()
        },
        |_| true,
    )
    .unwrap();
    assert_eq!(quotient, one);
}
