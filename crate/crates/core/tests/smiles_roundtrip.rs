//! Corpus-wide round-trip, canonicalization, and robustness checks.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chemdiv_core::smiles::{
    canonicalize, conciseness, graph_signature, parse, random_rewrite, validate,
};

#[test]
fn corpus_is_fully_valid() {
    let corpus = common::load_corpus();
    assert!(corpus.len() >= 400, "corpus too small: {}", corpus.len());
    for s in &corpus {
        assert!(validate(s), "corpus molecule failed validation: {s}");
    }
}

#[test]
fn corpus_round_trip_preserves_graphs() {
    for s in common::load_corpus() {
        let mol = parse(&s).unwrap();
        let canon = canonicalize(&mol);
        let reparsed = parse(&canon)
            .unwrap_or_else(|e| panic!("canonical form of {s} does not parse: {canon}: {e}"));
        assert_eq!(
            graph_signature(&mol),
            graph_signature(&reparsed),
            "{s} -> {canon} changed the graph"
        );
    }
}

#[test]
fn corpus_canonicalization_is_idempotent() {
    for s in common::load_corpus() {
        let once = canonicalize(&parse(&s).unwrap());
        let twice = canonicalize(&parse(&once).unwrap());
        assert_eq!(once, twice, "idempotence failed for {s}");
    }
}

#[test]
fn canonical_form_is_spelling_invariant_over_200_molecules() {
    let corpus = common::load_corpus();
    for (i, s) in corpus.iter().take(200).enumerate() {
        let mol = parse(s).unwrap();
        let reference = canonicalize(&mol);
        let rewritten = random_rewrite(&mol, i as u64 + 1);
        let from_rewrite = canonicalize(&parse(&rewritten).unwrap());
        assert_eq!(
            reference, from_rewrite,
            "molecule {s}, rewrite {rewritten}: canonical forms diverge"
        );
    }
}

#[test]
fn rewrite_explores_multiple_spellings() {
    let mol = parse("CC(C)CO").unwrap();
    let spellings: std::collections::HashSet<String> =
        (1..=50).map(|seed| random_rewrite(&mol, seed)).collect();
    assert!(spellings.len() >= 2);
}

#[test]
fn validate_survives_random_garbage() {
    // 100k arbitrary strings: never panic, conciseness stays in range
    let mut rng = ChaCha8Rng::seed_from_u64(0xF0220420);
    let charset: Vec<char> =
        "CcNnOoSsPpBbFIHl()[]=#-+@0123456789%./\\*&^ \t{}<>?!~`abc\u{00e9}\u{4e16}"
            .chars()
            .collect();
    for _ in 0..100_000 {
        let len = rng.random_range(0..40);
        let s: String = (0..len)
            .map(|_| charset[rng.random_range(0..charset.len())])
            .collect();
        let _ = validate(&s);
        let c = conciseness(&s);
        assert!((0.0..=1.0).contains(&c), "conciseness({s:?}) = {c}");
    }
}

#[test]
fn conciseness_values() {
    // canonical strings score exactly 1
    let canon = canonicalize(&parse("CC(C)CO").unwrap());
    assert_eq!(conciseness(&canon), 1.0);
    assert_eq!(conciseness("X#Q"), 0.0);
    assert_eq!(conciseness(""), 0.0);

    // a spelling with redundant ring closures is longer than its canonical
    // form and scores by the clamp formula
    let padded = "C1CC1C1CC1";
    let canonical_len = canonicalize(&parse(padded).unwrap()).len();
    let expected = 1.0 - (padded.len() - canonical_len) as f64 / padded.len() as f64;
    if padded.len() > canonical_len {
        assert!((conciseness(padded) - expected).abs() < 1e-12);
    } else {
        assert_eq!(conciseness(padded), 1.0);
    }
}

proptest! {
    #[test]
    fn conciseness_in_unit_interval(s in ".*") {
        let c = conciseness(&s);
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn validate_never_panics(s in ".*") {
        let _ = validate(&s);
    }
}
