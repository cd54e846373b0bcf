//! Property scorers and table-style report assembly.
//!
//! Validity, novelty, and conciseness are computed here; solubility
//! (normalized logP) and synthesizability (normalized SA score) are the
//! business of external predictors and arrive through [`load_scores`] as TSV
//! columns. The composite druglikeness is the arithmetic mean of whichever
//! components are available.
//!
//! Report conventions follow the evaluation protocol throughout: averages
//! are taken over valid records only, proportions over all records.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diversity::{self, DiversityError, MoleculeSet};
use crate::smiles;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("invalid SMILES in training corpus at record {index}: {smiles:?}")]
    InvalidTrainingSmiles { index: usize, smiles: String },
    #[error("score component '{name}' = {value} outside [0, 1]")]
    ComponentOutOfRange { name: String, value: f64 },
    #[error("malformed score file: {0}")]
    MalformedScores(String),
    #[error("score file row {row}, column '{column}': {detail}")]
    BadScoreValue {
        row: usize,
        column: String,
        detail: String,
    },
    #[error("no score row matches record {index} ({smiles:?})")]
    UnmatchedRecord { index: usize, smiles: String },
    #[error(transparent)]
    Diversity(#[from] DiversityError),
}

/// Canonical forms of a reference/training corpus, for novelty lookups.
#[derive(Debug, Clone, Default)]
pub struct TrainingSetIndex {
    canonical: HashSet<String>,
}

impl TrainingSetIndex {
    /// Build from SMILES strings; every entry must parse.
    pub fn from_smiles<'a>(
        smiles: impl IntoIterator<Item = &'a str>,
    ) -> Result<TrainingSetIndex, ScoringError> {
        let mut canonical = HashSet::new();
        for (index, s) in smiles.into_iter().enumerate() {
            let mol = smiles::parse(s).map_err(|_| ScoringError::InvalidTrainingSmiles {
                index,
                smiles: s.to_string(),
            })?;
            canonical.insert(smiles::canonicalize(&mol));
        }
        Ok(TrainingSetIndex { canonical })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<TrainingSetIndex, ScoringError> {
        let records = smiles::read_smiles_file(path)
            .map_err(|e| ScoringError::MalformedScores(e.to_string()))?;
        Self::from_smiles(records.iter().map(|r| r.smiles.as_str()))
    }

    pub fn len(&self) -> usize {
        self.canonical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }

    /// Membership test against an already-canonical form.
    pub fn contains_canonical(&self, canonical: &str) -> bool {
        self.canonical.contains(canonical)
    }
}

/// Novelty score: 1 for a valid SMILES outside the training set, 0.3 for a
/// valid SMILES inside it, 0 for an invalid SMILES.
pub fn novelty(smiles_text: &str, index: &TrainingSetIndex) -> f64 {
    match smiles::parse(smiles_text) {
        Err(_) => 0.0,
        Ok(mol) => {
            if index.contains_canonical(&smiles::canonicalize(&mol)) {
                0.3
            } else {
                1.0
            }
        }
    }
}

/// Composite druglikeness: arithmetic mean of solubility, novelty,
/// synthesizability, conciseness. Missing ingested components drop out of
/// the mean and mark the result partial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Druglikeness {
    pub value: f64,
    pub partial: bool,
}

pub fn druglikeness(
    smiles_text: &str,
    index: &TrainingSetIndex,
    solubility: Option<f64>,
    synthesizability: Option<f64>,
) -> Result<Druglikeness, ScoringError> {
    for (name, component) in [("solubility", solubility), ("synthesizability", synthesizability)] {
        if let Some(value) = component {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(ScoringError::ComponentOutOfRange {
                    name: name.to_string(),
                    value,
                });
            }
        }
    }
    let mut components = vec![
        novelty(smiles_text, index),
        smiles::conciseness(smiles_text),
    ];
    let mut partial = false;
    for ingested in [solubility, synthesizability] {
        match ingested {
            Some(v) => components.push(v),
            None => partial = true,
        }
    }
    let value = components.iter().sum::<f64>() / components.len() as f64;
    Ok(Druglikeness { value, partial })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Computed,
    Ingested,
}

/// Column-major view of per-record scores. Entries are None for records the
/// score file did not need to cover (invalid SMILES).
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    pub columns: BTreeMap<String, Vec<Option<f64>>>,
    pub provenance: BTreeMap<String, Provenance>,
}

/// Load a TSV score file and join it onto a molecule set.
///
/// The file needs a header whose first column is `smiles`; remaining columns
/// are numeric in [0, 1]. Records join by exact SMILES text first, then by
/// canonical form for rows whose text was re-canonicalized by the predictor.
/// Every valid record must end up matched; invalid records may stay bare.
/// Matched scores are also written into the set's per-record score maps.
pub fn load_scores<R: BufRead>(
    reader: R,
    set: &mut MoleculeSet,
) -> Result<ScoreTable, ScoringError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| ScoringError::MalformedScores("empty file".into()))?
        .map_err(|e| ScoringError::MalformedScores(e.to_string()))?;
    let columns: Vec<String> = header.split('\t').map(|c| c.trim().to_string()).collect();
    if columns.first().map(String::as_str) != Some("smiles") {
        return Err(ScoringError::MalformedScores(
            "first header column must be 'smiles'".into(),
        ));
    }
    let score_names: Vec<String> = columns[1..].to_vec();
    if score_names.is_empty() {
        return Err(ScoringError::MalformedScores(
            "no score columns after 'smiles'".into(),
        ));
    }

    // exact-text rows, plus a canonical-form fallback built lazily
    let mut by_text: HashMap<String, Vec<f64>> = HashMap::new();
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let row = lineno + 2;
        let line = line.map_err(|e| ScoringError::MalformedScores(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != columns.len() {
            return Err(ScoringError::MalformedScores(format!(
                "row {row} has {} fields, header has {}",
                fields.len(),
                columns.len()
            )));
        }
        let mut values = Vec::with_capacity(score_names.len());
        for (name, field) in score_names.iter().zip(&fields[1..]) {
            let value: f64 = field.trim().parse().map_err(|_| ScoringError::BadScoreValue {
                row,
                column: name.clone(),
                detail: format!("not a number: {field:?}"),
            })?;
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(ScoringError::BadScoreValue {
                    row,
                    column: name.clone(),
                    detail: format!("{value} outside [0, 1]"),
                });
            }
            values.push(value);
        }
        let text = fields[0].trim().to_string();
        by_text.insert(text.clone(), values.clone());
        rows.push((text, values));
    }

    let mut by_canonical: Option<HashMap<String, Vec<f64>>> = None;

    let mut table = ScoreTable::default();
    for name in &score_names {
        table.columns.insert(name.clone(), vec![None; set.len()]);
        table.provenance.insert(name.clone(), Provenance::Ingested);
    }

    for index in 0..set.len() {
        let (text, canonical) = {
            let rec = &set.records()[index];
            let canon = rec.molecule.as_ref().map(smiles::canonicalize);
            (rec.smiles.clone(), canon)
        };
        let values = match by_text.get(&text) {
            Some(v) => Some(v.clone()),
            None => match &canonical {
                Some(canon) => {
                    let map = by_canonical.get_or_insert_with(|| {
                        let mut m = HashMap::new();
                        for (text, values) in &rows {
                            if let Ok(mol) = smiles::parse(text) {
                                m.entry(smiles::canonicalize(&mol))
                                    .or_insert_with(|| values.clone());
                            }
                        }
                        m
                    });
                    map.get(canon).cloned()
                }
                None => None,
            },
        };
        match values {
            Some(values) => {
                for (name, value) in score_names.iter().zip(&values) {
                    table.columns.get_mut(name).unwrap()[index] = Some(*value);
                }
                let rec = &mut set.records_mut()[index];
                for (name, value) in score_names.iter().zip(&values) {
                    rec.scores.insert(name.clone(), *value);
                }
            }
            None => {
                if canonical.is_some() {
                    return Err(ScoringError::UnmatchedRecord {
                        index,
                        smiles: text,
                    });
                }
                // invalid record without a score row: leave unset
            }
        }
    }
    Ok(table)
}

pub fn load_scores_file(
    path: impl AsRef<Path>,
    set: &mut MoleculeSet,
) -> Result<ScoreTable, ScoringError> {
    let file = std::fs::File::open(path).map_err(|e| ScoringError::MalformedScores(e.to_string()))?;
    load_scores(std::io::BufReader::new(file), set)
}

/// The five familiar report columns for one molecule set, plus the counts
/// and threshold behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub label: String,
    pub prop_valid: f64,
    pub avg_score: f64,
    pub avg_internal_diversity: f64,
    pub prop_above_threshold: f64,
    pub internal_diversity_above_threshold: f64,
    pub threshold: f64,
    pub n_total: usize,
    pub n_valid: usize,
    pub n_above: usize,
}

/// Assemble the report for one set and one score column.
///
/// `prop_valid` and `prop_above_threshold` divide by the total record count
/// (invalid outputs count against the model); `avg_score` and the diversity
/// columns are computed over valid records only, with degenerate cases
/// (no valid records, fewer than two above threshold) reported as 0 and
/// exposed through the counts. Valid records must be fingerprinted and must
/// carry the score.
pub fn table_report(
    set: &MoleculeSet,
    score_name: &str,
    threshold: f64,
) -> Result<TableReport, ScoringError> {
    let n_total = set.len();
    let valid = set.valid_indices();
    let n_valid = valid.len();

    let mut score_sum = 0.0;
    let mut n_above = 0usize;
    for &i in &valid {
        let rec = &set.records()[i];
        let score = rec
            .scores
            .get(score_name)
            .copied()
            .ok_or_else(|| DiversityError::MissingScore {
                label: set.label.clone(),
                index: i,
                score: score_name.to_string(),
            })?;
        score_sum += score;
        if score >= threshold {
            n_above += 1;
        }
    }

    let avg_score = if n_valid > 0 {
        score_sum / n_valid as f64
    } else {
        0.0
    };

    let avg_internal_diversity = if n_valid > 0 {
        let mut valid_set = MoleculeSet::new(set.label.clone());
        for &i in &valid {
            valid_set.push(set.records()[i].clone());
        }
        diversity::internal_diversity(&valid_set)
            .map_err(ScoringError::Diversity)?
            .value
    } else {
        0.0
    };

    let (int_div_above, _) =
        diversity::thresholded_internal_diversity(set, score_name, threshold)?;

    let n = n_total.max(1) as f64;
    Ok(TableReport {
        label: set.label.clone(),
        prop_valid: n_valid as f64 / n,
        avg_score,
        avg_internal_diversity,
        prop_above_threshold: n_above as f64 / n,
        internal_diversity_above_threshold: int_div_above,
        threshold,
        n_total,
        n_valid,
        n_above,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::FingerprintConfig;

    fn index() -> TrainingSetIndex {
        TrainingSetIndex::from_smiles(["CCO", "c1ccccc1", "CC(=O)O"]).unwrap()
    }

    #[test]
    fn novelty_three_way() {
        let idx = index();
        assert_eq!(novelty("CCCCN", &idx), 1.0);
        assert_eq!(novelty("OCC", &idx), 0.3); // respelling of an indexed molecule
        assert_eq!(novelty("X#Q", &idx), 0.0);
    }

    #[test]
    fn index_rejects_invalid_entries() {
        assert!(matches!(
            TrainingSetIndex::from_smiles(["CCO", "garbage("]),
            Err(ScoringError::InvalidTrainingSmiles { index: 1, .. })
        ));
    }

    #[test]
    fn druglikeness_full_mean() {
        let idx = index();
        // novel canonical string: novelty 1, conciseness 1
        let d = druglikeness("CCCCN", &idx, Some(1.0), Some(1.0)).unwrap();
        assert_eq!(d.value, 1.0);
        assert!(!d.partial);

        let d = druglikeness("CCCCN", &idx, Some(0.8), Some(0.2)).unwrap();
        assert!((d.value - (0.8 + 1.0 + 0.2 + 1.0) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn druglikeness_partial_mean() {
        let idx = index();
        let d = druglikeness("CCCCN", &idx, None, None).unwrap();
        assert_eq!(d.value, 1.0);
        assert!(d.partial);
        let d = druglikeness("CCCCN", &idx, Some(0.5), None).unwrap();
        assert!((d.value - (1.0 + 1.0 + 0.5) / 3.0).abs() < 1e-12);
        assert!(d.partial);
    }

    #[test]
    fn druglikeness_range_checked() {
        let idx = index();
        assert!(matches!(
            druglikeness("CCO", &idx, Some(1.2), None),
            Err(ScoringError::ComponentOutOfRange { .. })
        ));
    }

    fn set_from(smiles: &[&str]) -> MoleculeSet {
        let mut set = MoleculeSet::from_smiles("test", smiles.iter().copied());
        set.ensure_fingerprints(&FingerprintConfig::default());
        set
    }

    #[test]
    fn load_scores_joins_by_text_and_canonical() {
        // the set spells ethylamine as C(C)N; the file carries the canonical
        // spelling, so that record only matches through the fallback pass
        let mut set = set_from(&["CCO", "C(C)N", "c1ccccc1"]);
        let canon = crate::smiles::canonicalize(&crate::smiles::parse("C(C)N").unwrap());
        assert_ne!(canon, "C(C)N");
        let tsv = format!("smiles\tp_active\nCCO\t0.9\n{canon}\t0.7\nc1ccccc1\t0.2\n");
        let table = load_scores(tsv.as_bytes(), &mut set).unwrap();
        let col = &table.columns["p_active"];
        assert_eq!(col[0], Some(0.9));
        assert_eq!(col[1], Some(0.7));
        assert_eq!(col[2], Some(0.2));
        assert_eq!(set.records()[1].scores["p_active"], 0.7);
        assert_eq!(table.provenance["p_active"], Provenance::Ingested);
    }

    #[test]
    fn load_scores_errors() {
        let mut set = set_from(&["CCO", "CCN"]);
        // unmatched valid record
        let err = load_scores("smiles\tp\nCCO\t0.9\n".as_bytes(), &mut set).unwrap_err();
        assert!(matches!(err, ScoringError::UnmatchedRecord { index: 1, .. }));

        // out-of-range probability
        let mut set = set_from(&["CCO"]);
        let err = load_scores("smiles\tp\nCCO\t1.2\n".as_bytes(), &mut set).unwrap_err();
        assert!(matches!(err, ScoringError::BadScoreValue { .. }));

        // non-numeric cell
        let mut set = set_from(&["CCO"]);
        let err = load_scores("smiles\tp\nCCO\thigh\n".as_bytes(), &mut set).unwrap_err();
        assert!(matches!(err, ScoringError::BadScoreValue { .. }));

        // bad header
        let mut set = set_from(&["CCO"]);
        let err = load_scores("name\tp\nCCO\t0.5\n".as_bytes(), &mut set).unwrap_err();
        assert!(matches!(err, ScoringError::MalformedScores(_)));

        // ragged row
        let mut set = set_from(&["CCO"]);
        let err = load_scores("smiles\tp\nCCO\n".as_bytes(), &mut set).unwrap_err();
        assert!(matches!(err, ScoringError::MalformedScores(_)));
    }

    #[test]
    fn invalid_records_do_not_need_score_rows() {
        let mut set = set_from(&["CCO", "][", "CCN"]);
        let tsv = "smiles\tp\nCCO\t0.9\nCCN\t0.1\n";
        let table = load_scores(tsv.as_bytes(), &mut set).unwrap();
        assert_eq!(table.columns["p"][1], None);
    }

    #[test]
    fn table_report_counts_and_averages() {
        let mut set = set_from(&["CCO", "OCC", "c1ccccc1", "bad(", "worse)"]);
        let tsv = "smiles\tp\nCCO\t0.9\nOCC\t0.9\nc1ccccc1\t0.3\n";
        load_scores(tsv.as_bytes(), &mut set).unwrap();
        let report = table_report(&set, "p", 0.8).unwrap();
        assert_eq!(report.n_total, 5);
        assert_eq!(report.n_valid, 3);
        assert_eq!(report.n_above, 2);
        assert!((report.prop_valid - 0.6).abs() < 1e-12);
        assert!((report.avg_score - (0.9 + 0.9 + 0.3) / 3.0).abs() < 1e-12);
        assert!((report.prop_above_threshold - 0.4).abs() < 1e-12);
        // CCO and OCC have identical fingerprints: diversity above threshold 0
        assert_eq!(report.internal_diversity_above_threshold, 0.0);
        assert!(report.avg_internal_diversity > 0.0);
    }

    #[test]
    fn table_report_degenerate_cases() {
        // all invalid
        let set = set_from(&["bad(", "worse)"]);
        let report = table_report(&set, "p", 0.8).unwrap();
        assert_eq!(report.prop_valid, 0.0);
        assert_eq!(report.avg_score, 0.0);
        assert_eq!(report.avg_internal_diversity, 0.0);
        assert_eq!(report.prop_above_threshold, 0.0);
        assert_eq!(report.internal_diversity_above_threshold, 0.0);
        assert_eq!(report.n_valid, 0);

        // single valid record above threshold
        let mut set = set_from(&["CCO", "bad("]);
        load_scores("smiles\tp\nCCO\t0.9\n".as_bytes(), &mut set).unwrap();
        let report = table_report(&set, "p", 0.8).unwrap();
        assert_eq!(report.n_above, 1);
        assert_eq!(report.internal_diversity_above_threshold, 0.0);
    }

    #[test]
    fn table_report_missing_score_errors() {
        let set = set_from(&["CCO"]);
        assert!(table_report(&set, "p", 0.8).is_err());
    }
}
