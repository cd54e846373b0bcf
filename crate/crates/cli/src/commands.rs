//! Subcommand implementations.

use std::io::Read;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use chemdiv_core::diversity::{
    challenge_compare, external_diversity, internal_diversity, subsampled_internal_diversity,
    tanimoto_variance, DiversityEstimate, DiversityReport, MoleculeSet,
};
use chemdiv_core::fingerprint::FingerprintConfig;
use chemdiv_core::scoring::load_scores_file;
use chemdiv_core::seqgen::{
    self, parse_training_config, read_checkpoint_file, write_checkpoint_file,
};
use chemdiv_core::smiles;

use crate::manifest::RunManifest;
use crate::{data_err, CliError};

/// Default reference-set cap for external diversity.
const DEFAULT_EXTERNAL_SUBSAMPLE: usize = 3000;

fn stem_of(path: &str) -> String {
    if path == "-" {
        return "stdin".to_string();
    }
    Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string())
}

fn read_records(input: &str) -> Result<Vec<smiles::SmilesRecord>, CliError> {
    if input == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| data_err(format!("cannot read stdin: {e}")))?;
        smiles::read_smiles_lines(text.as_bytes()).map_err(data_err)
    } else {
        smiles::read_smiles_file(input).map_err(|e| data_err(format!("cannot read {input}: {e}")))
    }
}

fn load_set(input: &str, label: &str) -> Result<MoleculeSet, CliError> {
    let records = read_records(input)?;
    let mut set = MoleculeSet::new(label);
    for rec in &records {
        set.push_smiles(&rec.smiles);
    }
    Ok(set)
}

/// Clone out the valid, fingerprinted records under the same label.
fn valid_subset(set: &MoleculeSet) -> MoleculeSet {
    let mut out = MoleculeSet::new(set.label.clone());
    for rec in set.records() {
        if rec.is_valid() {
            out.push(rec.clone());
        }
    }
    out
}

fn emit_report(line: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        None => {
            println!("{line}");
            Ok(())
        }
        Some(path) => std::fs::write(path, format!("{line}\n"))
            .map_err(|e| data_err(format!("cannot write {}: {e}", path.display()))),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string(value).map_err(|e| CliError::Internal(e.to_string()))
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ValidateSummary {
    label: String,
    n_total: usize,
    n_valid: usize,
    prop_valid: f64,
}

pub fn validate(input: &str, per_line: bool, out: Option<&Path>) -> Result<(), CliError> {
    let records = read_records(input)?;
    if records.is_empty() {
        return Err(data_err("empty input"));
    }
    let mut n_valid = 0usize;
    for (i, rec) in records.iter().enumerate() {
        match smiles::parse(&rec.smiles) {
            Ok(_) => {
                n_valid += 1;
                if per_line {
                    println!("{i}\tok\t{}", rec.smiles);
                }
            }
            Err(e) => {
                if per_line {
                    println!("{i}\t{e}\t{}", rec.smiles);
                }
            }
        }
    }
    let summary = ValidateSummary {
        label: stem_of(input),
        n_total: records.len(),
        n_valid,
        prop_valid: n_valid as f64 / records.len() as f64,
    };
    emit_report(&to_json(&summary)?, out)?;
    if let Some(path) = out {
        let mut manifest = RunManifest::new("validate", 0);
        manifest.flag("per_line", per_line).input(input)?;
        manifest.write_beside(path)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// divreport
// ---------------------------------------------------------------------------

pub struct DivreportArgs {
    pub input: String,
    pub input_b: Option<String>,
    pub metric: String,
    pub radius: u32,
    pub nbits: u32,
    pub folded: bool,
    pub subsample: Option<usize>,
    pub seed: u64,
    pub label: Option<String>,
    pub out: Option<PathBuf>,
}

pub fn divreport(args: DivreportArgs) -> Result<(), CliError> {
    let cfg = FingerprintConfig {
        radius: args.radius,
        nbits: args.nbits,
        use_folded: args.folded,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut set = load_set(&args.input, &args.label.clone().unwrap_or_else(|| stem_of(&args.input)))?;
    let n_total = set.len();
    set.ensure_fingerprints(&cfg);
    let valid = valid_subset(&set);
    let n_valid = valid.len();
    if n_valid == 0 {
        return Err(data_err("no valid molecules in input"));
    }

    let (metric_name, estimate): (&str, DiversityEstimate) = match args.metric.as_str() {
        "internal" => {
            let est = match args.subsample {
                Some(k) if k > 0 => {
                    subsampled_internal_diversity(&valid, k, args.seed).map_err(data_err)?
                }
                _ => internal_diversity(&valid).map_err(data_err)?,
            };
            ("internal_diversity", est)
        }
        "variance" => {
            if args.subsample.is_some() {
                return Err(CliError::Usage(
                    "--subsample applies to the internal and external metrics only".into(),
                ));
            }
            ("tanimoto_variance", tanimoto_variance(&valid).map_err(data_err)?)
        }
        "external" => {
            let input_b = args.input_b.as_deref().ok_or_else(|| {
                CliError::Usage("external metric needs a second input file".into())
            })?;
            let mut set_b = load_set(input_b, &stem_of(input_b))?;
            set_b.ensure_fingerprints(&cfg);
            let valid_b = valid_subset(&set_b);
            if valid_b.is_empty() {
                return Err(data_err("no valid molecules in second input"));
            }
            let cap = args.subsample.unwrap_or(DEFAULT_EXTERNAL_SUBSAMPLE);
            let (reference, subsampled) = if cap > 0 && cap < valid_b.len() {
                let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
                let mut chosen =
                    rand::seq::index::sample(&mut rng, valid_b.len(), cap).into_vec();
                chosen.sort_unstable();
                let mut sub = MoleculeSet::new(valid_b.label.clone());
                for &i in &chosen {
                    sub.push(valid_b.records()[i].clone());
                }
                (sub, true)
            } else {
                (valid_b, false)
            };
            let mut est = external_diversity(&valid, &reference).map_err(data_err)?;
            est.subsampled = subsampled;
            est.seed = subsampled.then_some(args.seed);
            ("external_diversity", est)
        }
        other => return Err(CliError::Usage(format!("unknown metric {other:?}"))),
    };

    let label = match (&args.metric[..], &args.input_b) {
        ("external", Some(b)) => format!("{} vs {}", set.label, stem_of(b)),
        _ => set.label.clone(),
    };
    let report = DiversityReport {
        label,
        n_total,
        n_valid,
        metric: metric_name.to_string(),
        value: estimate.value,
        n_used: estimate.n_used,
        subsampled: estimate.subsampled,
        seed: estimate.seed,
    };
    emit_report(&to_json(&report)?, args.out.as_deref())?;

    if let Some(path) = &args.out {
        let mut manifest = RunManifest::new("divreport", args.seed);
        manifest
            .flag("metric", &args.metric)
            .flag("radius", args.radius)
            .flag("nbits", args.nbits)
            .flag("folded", args.folded)
            .flag(
                "subsample",
                args.subsample.map_or("default".into(), |k| k.to_string()),
            );
        manifest.input(&args.input)?;
        if let Some(b) = &args.input_b {
            manifest.input(b)?;
        }
        manifest.write_beside(path)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// challenge
// ---------------------------------------------------------------------------

pub struct ChallengeArgs {
    pub gen: String,
    pub nature: String,
    pub scores: PathBuf,
    pub score_col: String,
    pub threshold: f64,
    pub radius: u32,
    pub nbits: u32,
    pub folded: bool,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ChallengeReport {
    generated: String,
    nature: String,
    score: String,
    threshold: f64,
    i_g: f64,
    i_n: f64,
    ratio: f64,
    pass: bool,
    n_g: usize,
    n_n: usize,
}

pub fn challenge(args: ChallengeArgs) -> Result<(), CliError> {
    let cfg = FingerprintConfig {
        radius: args.radius,
        nbits: args.nbits,
        use_folded: args.folded,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut gen_set = load_set(&args.gen, &stem_of(&args.gen))?;
    let mut nat_set = load_set(&args.nature, &stem_of(&args.nature))?;
    gen_set.ensure_fingerprints(&cfg);
    nat_set.ensure_fingerprints(&cfg);
    load_scores_file(&args.scores, &mut gen_set).map_err(data_err)?;
    load_scores_file(&args.scores, &mut nat_set).map_err(data_err)?;

    let verdict = challenge_compare(&gen_set, &nat_set, &args.score_col, args.threshold)
        .map_err(data_err)?;

    let report = ChallengeReport {
        generated: gen_set.label.clone(),
        nature: nat_set.label.clone(),
        score: args.score_col.clone(),
        threshold: args.threshold,
        i_g: verdict.i_g,
        i_n: verdict.i_n,
        ratio: verdict.ratio,
        pass: verdict.pass,
        n_g: verdict.n_g,
        n_n: verdict.n_n,
    };
    emit_report(&to_json(&report)?, args.out.as_deref())?;
    println!(
        "{}: I(gen ∩ P) = {:.6} over {} samples, I(nature ∩ P) = {:.6} over {} samples, ratio {:.6}",
        if verdict.pass { "PASS" } else { "FAIL" },
        verdict.i_g,
        verdict.n_g,
        verdict.i_n,
        verdict.n_n,
        verdict.ratio,
    );

    if let Some(path) = &args.out {
        let mut manifest = RunManifest::new("challenge", 0);
        manifest
            .flag("score_col", &args.score_col)
            .flag("threshold", args.threshold)
            .flag("radius", args.radius)
            .flag("nbits", args.nbits)
            .flag("folded", args.folded);
        manifest.input(&args.gen)?;
        manifest.input(&args.nature)?;
        manifest.input(&args.scores.to_string_lossy())?;
        manifest.write_beside(path)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// train / sample
// ---------------------------------------------------------------------------

pub fn train(config_path: &Path, corpus_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let config_text = std::fs::read_to_string(config_path)
        .map_err(|e| data_err(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = parse_training_config(&config_text).map_err(data_err)?;
    let corpus: Vec<String> = smiles::read_smiles_file(corpus_path)
        .map_err(|e| data_err(format!("cannot read {}: {e}", corpus_path.display())))?
        .into_iter()
        .map(|r| r.smiles)
        .collect();

    let outcome = seqgen::train(&cfg, &corpus).map_err(data_err)?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| data_err(format!("cannot create {}: {e}", out_dir.display())))?;
    write_checkpoint_file(
        out_dir.join("checkpoint.bin"),
        &outcome.policy,
        outcome.discriminator.as_ref(),
    )
    .map_err(|e| data_err(format!("cannot write checkpoint: {e}")))?;

    let mut lines = String::new();
    for report in &outcome.reports {
        lines.push_str(&to_json(report)?);
        lines.push('\n');
    }
    std::fs::write(out_dir.join("epochs.jsonl"), lines)
        .map_err(|e| data_err(format!("cannot write epoch reports: {e}")))?;

    let mut manifest = RunManifest::new("train", cfg.seed);
    manifest.flags(cfg.as_key_values());
    manifest.input(&config_path.to_string_lossy())?;
    manifest.input(&corpus_path.to_string_lossy())?;
    manifest.write_to(&out_dir.join("manifest.json"))?;

    if let Some(last) = outcome.reports.last() {
        eprintln!(
            "trained {} epochs: prop_valid {:.3}, avg objective {:.3}, thresholded diversity {:.6}",
            cfg.epochs,
            last.table.prop_valid,
            last.avg_objective,
            last.table.internal_diversity_above_threshold
        );
    }
    Ok(())
}

pub fn sample(checkpoint: &Path, n: usize, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let (policy, _) = read_checkpoint_file(checkpoint)
        .map_err(|e| data_err(format!("cannot read checkpoint: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for _ in 0..n {
        let seq = policy.sample_sequence(&mut rng);
        text.push_str(&policy.alphabet().decode_trimmed(&seq));
        text.push('\n');
    }
    match out {
        None => print!("{text}"),
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| data_err(format!("cannot write {}: {e}", path.display())))?;
            let mut manifest = RunManifest::new("sample", seed);
            manifest.flag("n", n);
            manifest.input(&checkpoint.to_string_lossy())?;
            manifest.write_beside(path)?;
        }
    }
    Ok(())
}
