//! Shared test support: bundled-corpus loading, brute-force diversity
//! oracles independent of the library's fixed-point path, and a generator
//! of random valence-safe molecules for large synthetic sets.

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use chemdiv_core::diversity::{MoleculeRecord, MoleculeSet};
use chemdiv_core::fingerprint::{tanimoto_distance, Fingerprint, FingerprintConfig};
use chemdiv_core::smiles;

pub fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus.smi")
}

pub fn load_corpus() -> Vec<String> {
    smiles::read_smiles_file(corpus_path())
        .expect("bundled corpus must be readable")
        .into_iter()
        .map(|r| r.smiles)
        .collect()
}

/// Mean Tanimoto distance over all ordered pairs, summed naively in f64.
/// This is the independent oracle for the fixed-point implementation.
pub fn brute_internal_diversity(fps: &[&Fingerprint]) -> f64 {
    let n = fps.len();
    let mut total = 0.0;
    for x in fps {
        for y in fps {
            total += tanimoto_distance(x, y).unwrap();
        }
    }
    total / (n * n) as f64
}

pub fn brute_tanimoto_variance(fps: &[&Fingerprint]) -> f64 {
    let n = fps.len();
    let mut total = 0.0;
    for x in fps {
        for y in fps {
            let d = tanimoto_distance(x, y).unwrap();
            total += d * d;
        }
    }
    total / (n * n) as f64
}

pub fn brute_external_diversity(a: &[&Fingerprint], b: &[&Fingerprint]) -> f64 {
    let mut total = 0.0;
    for x in a {
        for y in b {
            total += tanimoto_distance(x, y).unwrap();
        }
    }
    total / (a.len() * b.len()) as f64
}

pub fn fingerprints(set: &MoleculeSet) -> Vec<&Fingerprint> {
    set.records()
        .iter()
        .map(|r| r.fingerprint.as_ref().expect("record not fingerprinted"))
        .collect()
}

/// Build a fingerprinted set from SMILES strings, panicking on invalid ones.
pub fn set_of(label: &str, strings: &[String]) -> MoleculeSet {
    let mut set = MoleculeSet::from_smiles(label, strings.iter().map(String::as_str));
    assert_eq!(set.n_valid(), set.len(), "fixture contains invalid SMILES");
    set.ensure_fingerprints(&FingerprintConfig::default());
    set
}

/// Synthetic record with an explicit feature set; the molecule slot is
/// filled with a parsed placeholder so set invariants hold.
pub fn synthetic_record(features: Vec<u64>, score: Option<f64>) -> MoleculeRecord {
    let mut record = MoleculeRecord::from_smiles("C");
    record.fingerprint =
        Some(Fingerprint::from_features(features, FingerprintConfig::default()).unwrap());
    if let Some(s) = score {
        record.scores.insert("p".to_string(), s);
    }
    record
}

/// Random valence-safe molecule over C/N/O chains with light branching.
/// Remaining valence is tracked per atom, so every output parses.
pub fn random_molecule(rng: &mut ChaCha8Rng) -> String {
    let backbone_len = rng.random_range(3..=14);
    let mut out = String::new();
    for i in 0..backbone_len {
        let (symbol, valence) = match rng.random_range(0..10) {
            0..=6 => ("C", 4),
            7..=8 => ("N", 3),
            _ => ("O", 2),
        };
        let chain_bonds = i32::from(i > 0) + i32::from(i + 1 < backbone_len);
        let mut spare = valence - chain_bonds;
        out.push_str(symbol);
        while spare >= 1 && rng.random_range(0..10) < 3 {
            match rng.random_range(0..5) {
                0 if spare >= 2 => {
                    out.push_str("(=O)");
                    spare -= 2;
                }
                1 => {
                    out.push_str("(C)");
                    spare -= 1;
                }
                2 => {
                    out.push_str("(N)");
                    spare -= 1;
                }
                3 => {
                    out.push_str("(O)");
                    spare -= 1;
                }
                _ => {
                    out.push_str("(CC)");
                    spare -= 1;
                }
            }
        }
    }
    out
}

/// A set of n random molecules, parsed and fingerprinted.
pub fn synthetic_set(label: &str, n: usize, seed: u64) -> MoleculeSet {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strings: Vec<String> = (0..n).map(|_| random_molecule(&mut rng)).collect();
    set_of(label, &strings)
}
