//! Internal/external diversity and Tanimoto variance of molecule sets.
//!
//! Internal diversity of a set A is the mean Tanimoto distance over ALL
//! ordered pairs of A×A, including the zero diagonal; Tanimoto variance is
//! the mean squared distance; external (relative) diversity averages over
//! the cross product of two sets. Sets are multisets: duplicate records stay
//! in and lower diversity, matching how generated samples are evaluated.
//!
//! Pairwise sums are accumulated in 128-bit fixed point (scale 2^80). Every
//! Tanimoto distance is a small-denominator rational whose f64 value scales
//! to an exact integer at that scale, so the accumulated sum is exact and
//! the final value is independent of summation order. Consequences worth
//! having: results are bit-identical across thread counts, duplicating a
//! set leaves its internal diversity bit-identical, and E(A,A) equals I(A)
//! exactly.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fingerprint::{similarity_unchecked, Fingerprint, FingerprintConfig};
use crate::smiles::{self, Molecule};

/// Fixed-point scale for exact pair sums. Distances below 2^-28 (other than
/// exact zero) would lose bits, but a nonzero Tanimoto distance is at least
/// 1/|union|, far above that for any real fingerprint. Headroom: i128 holds
/// 2^47 scaled terms, i.e. pair counts up to ~1.4e14.
const FIXED_SCALE: f64 = (1u128 << 80) as f64;

#[inline]
fn to_fixed(d: f64) -> i128 {
    (d * FIXED_SCALE) as i128
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiversityError {
    #[error("diversity of an empty set is undefined")]
    EmptySet,
    #[error("record {index} of set '{label}' has no fingerprint")]
    MissingFingerprint { label: String, index: usize },
    #[error("sets carry fingerprints with different configs")]
    ConfigMismatch,
    #[error("subsample size {k} out of range 1..={n}")]
    SubsampleOutOfRange { k: usize, n: usize },
    #[error("record {index} of set '{label}' has no '{score}' score")]
    MissingScore {
        label: String,
        index: usize,
        score: String,
    },
}

/// One molecule of a set: the raw SMILES text, its parsed graph when the
/// text is valid, an optional fingerprint, and named per-record scores.
#[derive(Debug, Clone, Default)]
pub struct MoleculeRecord {
    pub smiles: String,
    pub molecule: Option<Molecule>,
    pub fingerprint: Option<Fingerprint>,
    pub scores: BTreeMap<String, f64>,
}

impl MoleculeRecord {
    /// Parse the text and keep the molecule on success.
    pub fn from_smiles(smiles: &str) -> MoleculeRecord {
        MoleculeRecord {
            smiles: smiles.to_string(),
            molecule: smiles::parse(smiles).ok(),
            fingerprint: None,
            scores: BTreeMap::new(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.molecule.is_some()
    }
}

/// An ordered multiset of molecules with a label ("nature", "generated", ...).
#[derive(Debug, Clone, Default)]
pub struct MoleculeSet {
    pub label: String,
    records: Vec<MoleculeRecord>,
}

impl MoleculeSet {
    pub fn new(label: impl Into<String>) -> MoleculeSet {
        MoleculeSet {
            label: label.into(),
            records: Vec::new(),
        }
    }

    pub fn from_smiles<'a>(
        label: impl Into<String>,
        smiles: impl IntoIterator<Item = &'a str>,
    ) -> MoleculeSet {
        let mut set = MoleculeSet::new(label);
        for s in smiles {
            set.push_smiles(s);
        }
        set
    }

    /// Load from SMILES-file lines (comments and blanks already filtered by
    /// the reader). Parsing happens in parallel; record order is preserved.
    pub fn from_reader<R: BufRead>(
        label: impl Into<String>,
        reader: R,
    ) -> std::io::Result<MoleculeSet> {
        let lines = smiles::read_smiles_lines(reader)?;
        let records: Vec<MoleculeRecord> = lines
            .par_iter()
            .map(|rec| MoleculeRecord::from_smiles(&rec.smiles))
            .collect();
        Ok(MoleculeSet {
            label: label.into(),
            records,
        })
    }

    pub fn from_file(
        label: impl Into<String>,
        path: impl AsRef<Path>,
    ) -> std::io::Result<MoleculeSet> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(label, std::io::BufReader::new(file))
    }

    pub fn push_smiles(&mut self, smiles: &str) {
        self.records.push(MoleculeRecord::from_smiles(smiles));
    }

    pub fn push(&mut self, record: MoleculeRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[MoleculeRecord] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [MoleculeRecord] {
        &mut self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_valid(&self) -> usize {
        self.records.iter().filter(|r| r.is_valid()).count()
    }

    /// Fingerprint every valid record that does not have one yet.
    pub fn ensure_fingerprints(&mut self, cfg: &FingerprintConfig) {
        self.records.par_iter_mut().for_each(|rec| {
            if rec.fingerprint.is_none() {
                if let Some(mol) = &rec.molecule {
                    rec.fingerprint = Some(crate::fingerprint::morgan_fingerprint(mol, cfg));
                }
            }
        });
    }

    /// Indices of valid records.
    pub fn valid_indices(&self) -> Vec<usize> {
        (0..self.records.len())
            .filter(|&i| self.records[i].is_valid())
            .collect()
    }
}

/// A diversity value plus how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityEstimate {
    pub value: f64,
    pub n_used: usize,
    pub subsampled: bool,
    pub seed: Option<u64>,
}

/// Report object for one metric over one set, as emitted by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiversityReport {
    pub label: String,
    pub n_total: usize,
    pub n_valid: usize,
    pub metric: String,
    pub value: f64,
    pub n_used: usize,
    pub subsampled: bool,
    pub seed: Option<u64>,
}

/// Gather fingerprint references for every record, error on gaps, and check
/// that all records share one config.
fn gather_fingerprints<'a>(
    set: &'a MoleculeSet,
) -> Result<Vec<&'a Fingerprint>, DiversityError> {
    let mut fps = Vec::with_capacity(set.len());
    for (index, rec) in set.records.iter().enumerate() {
        let fp = rec
            .fingerprint
            .as_ref()
            .ok_or_else(|| DiversityError::MissingFingerprint {
                label: set.label.clone(),
                index,
            })?;
        fps.push(fp);
    }
    if let Some((first, rest)) = fps.split_first() {
        if rest.iter().any(|f| f.config() != first.config()) {
            return Err(DiversityError::ConfigMismatch);
        }
    }
    Ok(fps)
}

#[inline]
fn pair_distance(a: &Fingerprint, b: &Fingerprint) -> f64 {
    1.0 - similarity_unchecked(a, b)
}

/// Sum of f(d) over all ordered pairs of `fps` (diagonal contributes zero),
/// in exact fixed point. Rows run in parallel; exactness makes the result
/// independent of the split.
fn ordered_pair_sum(fps: &[&Fingerprint], square: bool) -> i128 {
    let upper: i128 = (0..fps.len())
        .into_par_iter()
        .map(|i| {
            let mut row: i128 = 0;
            for j in (i + 1)..fps.len() {
                let d = pair_distance(fps[i], fps[j]);
                row += to_fixed(if square { d * d } else { d });
            }
            row
        })
        .sum();
    2 * upper
}

fn pair_mean(total: i128, count: usize) -> f64 {
    (total as f64) / (FIXED_SCALE * count as f64)
}

fn internal_of(fps: &[&Fingerprint], square: bool) -> Result<f64, DiversityError> {
    if fps.is_empty() {
        return Err(DiversityError::EmptySet);
    }
    let total = ordered_pair_sum(fps, square);
    Ok(pair_mean(total, fps.len() * fps.len()))
}

/// Internal diversity I(A): mean Tanimoto distance over all ordered pairs of
/// A×A including the diagonal. Every record must be fingerprinted.
pub fn internal_diversity(set: &MoleculeSet) -> Result<DiversityEstimate, DiversityError> {
    let fps = gather_fingerprints(set)?;
    Ok(DiversityEstimate {
        value: internal_of(&fps, false)?,
        n_used: fps.len(),
        subsampled: false,
        seed: None,
    })
}

/// Tanimoto variance V(A): mean squared Tanimoto distance over A×A.
pub fn tanimoto_variance(set: &MoleculeSet) -> Result<DiversityEstimate, DiversityError> {
    let fps = gather_fingerprints(set)?;
    Ok(DiversityEstimate {
        value: internal_of(&fps, true)?,
        n_used: fps.len(),
        subsampled: false,
        seed: None,
    })
}

/// External (relative) diversity E(A1, A2): mean Tanimoto distance over
/// A1×A2. `n_used` reports the total number of records involved.
pub fn external_diversity(
    a1: &MoleculeSet,
    a2: &MoleculeSet,
) -> Result<DiversityEstimate, DiversityError> {
    let fa = gather_fingerprints(a1)?;
    let fb = gather_fingerprints(a2)?;
    if fa.is_empty() || fb.is_empty() {
        return Err(DiversityError::EmptySet);
    }
    if fa[0].config() != fb[0].config() {
        return Err(DiversityError::ConfigMismatch);
    }
    let total: i128 = fa
        .par_iter()
        .map(|x| {
            let mut row: i128 = 0;
            for y in &fb {
                row += to_fixed(pair_distance(x, y));
            }
            row
        })
        .sum();
    Ok(DiversityEstimate {
        value: pair_mean(total, fa.len() * fb.len()),
        n_used: fa.len() + fb.len(),
        subsampled: false,
        seed: None,
    })
}

/// Internal diversity of a uniform without-replacement subsample of size k.
/// Deterministic for a given (set, k, seed).
pub fn subsampled_internal_diversity(
    set: &MoleculeSet,
    k: usize,
    seed: u64,
) -> Result<DiversityEstimate, DiversityError> {
    let fps = gather_fingerprints(set)?;
    if k == 0 || k > fps.len() {
        return Err(DiversityError::SubsampleOutOfRange { k, n: fps.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = rand::seq::index::sample(&mut rng, fps.len(), k).into_vec();
    chosen.sort_unstable();
    let subset: Vec<&Fingerprint> = chosen.iter().map(|&i| fps[i]).collect();
    Ok(DiversityEstimate {
        value: internal_of(&subset, false)?,
        n_used: k,
        subsampled: true,
        seed: Some(seed),
    })
}

/// Outcome of the generated-vs-natural diversity comparison at a property
/// threshold: pass iff the generated side is at least as internally diverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChallengeVerdict {
    pub i_g: f64,
    pub i_n: f64,
    pub ratio: f64,
    pub pass: bool,
    pub n_g: usize,
    pub n_n: usize,
}

/// Internal diversity of the records whose `score_name` is at least
/// `threshold`. Fewer than two qualifying records report 0 — the diversity
/// of a degenerate set is treated as undetectable, with the count exposing
/// why. Only valid records participate; every valid record must carry the
/// score.
pub(crate) fn thresholded_internal_diversity(
    set: &MoleculeSet,
    score_name: &str,
    threshold: f64,
) -> Result<(f64, usize), DiversityError> {
    let mut fps: Vec<&Fingerprint> = Vec::new();
    for (index, rec) in set.records.iter().enumerate() {
        if !rec.is_valid() {
            continue;
        }
        let score =
            rec.scores
                .get(score_name)
                .copied()
                .ok_or_else(|| DiversityError::MissingScore {
                    label: set.label.clone(),
                    index,
                    score: score_name.to_string(),
                })?;
        if score >= threshold {
            let fp =
                rec.fingerprint
                    .as_ref()
                    .ok_or_else(|| DiversityError::MissingFingerprint {
                        label: set.label.clone(),
                        index,
                    })?;
            fps.push(fp);
        }
    }
    let n = fps.len();
    if n < 2 {
        return Ok((0.0, n));
    }
    if fps[1..].iter().any(|f| f.config() != fps[0].config()) {
        return Err(DiversityError::ConfigMismatch);
    }
    Ok((internal_of(&fps, false)?, n))
}

/// Compare internal diversity of generated vs natural molecules restricted
/// to those satisfying the property (score >= threshold).
pub fn challenge_compare(
    generated: &MoleculeSet,
    nature: &MoleculeSet,
    score_name: &str,
    threshold: f64,
) -> Result<ChallengeVerdict, DiversityError> {
    let (i_g, n_g) = thresholded_internal_diversity(generated, score_name, threshold)?;
    let (i_n, n_n) = thresholded_internal_diversity(nature, score_name, threshold)?;
    let ratio = if i_n == 0.0 {
        if i_g == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        i_g / i_n
    };
    Ok(ChallengeVerdict {
        i_g,
        i_n,
        ratio,
        pass: i_g >= i_n,
        n_g,
        n_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::Fingerprint;

    fn synthetic_set(feature_sets: &[&[u64]]) -> MoleculeSet {
        let mut set = MoleculeSet::new("test");
        for (i, feats) in feature_sets.iter().enumerate() {
            set.push(MoleculeRecord {
                smiles: format!("synthetic-{i}"),
                molecule: Some(crate::smiles::parse("C").unwrap()),
                fingerprint: Some(
                    Fingerprint::from_features(feats.to_vec(), FingerprintConfig::default())
                        .unwrap(),
                ),
                scores: BTreeMap::new(),
            });
        }
        set
    }

    #[test]
    fn singleton_diversity_is_zero() {
        let set = synthetic_set(&[&[1, 2, 3]]);
        let est = internal_diversity(&set).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.n_used, 1);
        assert!(!est.subsampled);
    }

    #[test]
    fn two_records_give_half_their_distance() {
        // distance is 1 - 2/4 = 0.5, so I = 0.5/2 = 0.25 and V = 0.25/2
        let set = synthetic_set(&[&[1, 2, 3], &[2, 3, 4]]);
        assert_eq!(internal_diversity(&set).unwrap().value, 0.25);
        assert_eq!(tanimoto_variance(&set).unwrap().value, 0.125);
    }

    #[test]
    fn duplication_is_bit_exact() {
        let base: Vec<&[u64]> = vec![&[1, 2, 3], &[2, 3, 4], &[9, 10], &[1, 9, 11, 12]];
        let set = synthetic_set(&base);
        let doubled = synthetic_set(&[base.clone(), base.clone()].concat());
        let a = internal_diversity(&set).unwrap().value;
        let b = internal_diversity(&doubled).unwrap().value;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn external_of_set_with_itself_matches_internal() {
        let set = synthetic_set(&[&[1, 2, 3], &[2, 3, 4], &[9, 10], &[1, 9, 11, 12]]);
        let i = internal_diversity(&set).unwrap().value;
        let e = external_diversity(&set, &set).unwrap().value;
        assert_eq!(i.to_bits(), e.to_bits());
    }

    #[test]
    fn external_is_symmetric_and_handles_singletons() {
        let a = synthetic_set(&[&[1, 2]]);
        let b = synthetic_set(&[&[3, 4]]);
        let e1 = external_diversity(&a, &b).unwrap().value;
        let e2 = external_diversity(&b, &a).unwrap().value;
        assert_eq!(e1, 1.0);
        assert_eq!(e1, e2);
    }

    #[test]
    fn variance_bounded_by_diversity() {
        let set = synthetic_set(&[&[1, 2, 3], &[2, 3, 4], &[9, 10], &[1, 9, 11, 12], &[1, 2]]);
        let i = internal_diversity(&set).unwrap().value;
        let v = tanimoto_variance(&set).unwrap().value;
        assert!(v <= i);
    }

    #[test]
    fn empty_set_errors() {
        let set = MoleculeSet::new("empty");
        assert_eq!(internal_diversity(&set), Err(DiversityError::EmptySet));
    }

    #[test]
    fn missing_fingerprint_errors() {
        let mut set = MoleculeSet::new("gap");
        set.push_smiles("CCO");
        assert!(matches!(
            internal_diversity(&set),
            Err(DiversityError::MissingFingerprint { index: 0, .. })
        ));
    }

    #[test]
    fn subsample_full_size_matches_exact() {
        let set = synthetic_set(&[&[1, 2, 3], &[2, 3, 4], &[9, 10], &[1, 9, 11, 12]]);
        let full = internal_diversity(&set).unwrap();
        let sub = subsampled_internal_diversity(&set, set.len(), 7).unwrap();
        assert_eq!(full.value.to_bits(), sub.value.to_bits());
        assert!(sub.subsampled);
        assert_eq!(sub.seed, Some(7));
    }

    #[test]
    fn subsample_is_deterministic_and_validated() {
        let set = synthetic_set(&[&[1], &[2], &[3], &[4], &[5], &[1, 2]]);
        let a = subsampled_internal_diversity(&set, 3, 42).unwrap();
        let b = subsampled_internal_diversity(&set, 3, 42).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert!(matches!(
            subsampled_internal_diversity(&set, 0, 1),
            Err(DiversityError::SubsampleOutOfRange { .. })
        ));
        assert!(matches!(
            subsampled_internal_diversity(&set, 7, 1),
            Err(DiversityError::SubsampleOutOfRange { .. })
        ));
    }

    fn scored(set: &mut MoleculeSet, name: &str, value: f64) {
        for rec in set.records_mut() {
            rec.scores.insert(name.to_string(), value);
        }
    }

    #[test]
    fn challenge_same_set_passes_with_ratio_one() {
        let mut g = synthetic_set(&[&[1, 2], &[3, 4], &[5, 6]]);
        scored(&mut g, "p", 0.9);
        let verdict = challenge_compare(&g, &g, "p", 0.8).unwrap();
        assert!(verdict.pass);
        assert_eq!(verdict.ratio, 1.0);
        assert_eq!(verdict.n_g, 3);
    }

    #[test]
    fn challenge_degenerate_generated_set_fails() {
        let mut g = synthetic_set(&[&[1, 2]]);
        scored(&mut g, "p", 0.9);
        let mut n = synthetic_set(&[&[1, 2], &[3, 4], &[5, 6]]);
        scored(&mut n, "p", 0.9);
        let verdict = challenge_compare(&g, &n, "p", 0.8).unwrap();
        assert_eq!(verdict.i_g, 0.0);
        assert_eq!(verdict.n_g, 1);
        assert!(!verdict.pass);
        assert_eq!(verdict.ratio, 0.0);
    }

    #[test]
    fn challenge_threshold_above_everyone_is_degenerate_pass() {
        let mut g = synthetic_set(&[&[1, 2], &[3, 4]]);
        scored(&mut g, "p", 0.5);
        let verdict = challenge_compare(&g, &g, "p", 0.8).unwrap();
        assert_eq!((verdict.n_g, verdict.n_n), (0, 0));
        assert_eq!(verdict.i_g, 0.0);
        assert!(verdict.pass, "0 >= 0 passes, counts expose the degeneracy");
    }

    #[test]
    fn challenge_missing_score_errors() {
        let g = synthetic_set(&[&[1, 2], &[3, 4]]);
        assert!(matches!(
            challenge_compare(&g, &g, "p", 0.8),
            Err(DiversityError::MissingScore { .. })
        ));
    }

    #[test]
    fn invalid_records_do_not_need_scores() {
        let mut g = synthetic_set(&[&[1, 2], &[3, 4], &[5, 6]]);
        scored(&mut g, "p", 0.9);
        g.push_smiles("not-a-molecule");
        let verdict = challenge_compare(&g, &g, "p", 0.8).unwrap();
        assert_eq!(verdict.n_g, 3);
    }
}
