//! The full training loop: MLE pretraining, then alternating REINFORCE and
//! discriminator rounds, with a table-style evaluation report per epoch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainingConfig;
use super::discriminator::{discriminator_train, Discriminator};
use super::policy::{mle_pretrain, Alphabet, Policy};
use super::rewards::mixed_reward;
use super::rollout::reinforce_step;
use super::SeqGenError;
use crate::diversity::MoleculeSet;
use crate::fingerprint::FingerprintConfig;
use crate::scoring::{self, TableReport};

/// One line of the per-epoch JSON-lines report. Epoch 0 is the post-MLE
/// baseline, before any RL update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean objective over the whole evaluation sample, invalid outputs
    /// included.
    pub avg_objective: f64,
    #[serde(flatten)]
    pub table: TableReport,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub policy: Policy,
    pub discriminator: Option<Discriminator>,
    pub reports: Vec<EpochReport>,
    /// How many discriminator training rounds ran (always 0 when lambda=0).
    pub discriminator_rounds: usize,
}

fn eval_seed(seed: u64, epoch: usize) -> u64 {
    seed.wrapping_add((epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn evaluate(
    policy: &Policy,
    objective: &(dyn Fn(&[u8]) -> f64 + Sync),
    cfg: &TrainingConfig,
    epoch: usize,
) -> Result<EpochReport, SeqGenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(eval_seed(cfg.seed, epoch));
    let sequences: Vec<Vec<u8>> = (0..cfg.eval_samples)
        .map(|_| policy.sample_sequence(&mut rng))
        .collect();

    let mut set = MoleculeSet::new(format!("epoch-{epoch}"));
    let mut objective_sum = 0.0;
    for seq in &sequences {
        set.push_smiles(&policy.alphabet().decode_trimmed(seq));
        objective_sum += objective(seq);
    }
    set.ensure_fingerprints(&FingerprintConfig::default());
    for (rec, seq) in set.records_mut().iter_mut().zip(&sequences) {
        rec.scores.insert("objective".to_string(), objective(seq));
    }
    let table = scoring::table_report(&set, "objective", cfg.threshold)?;
    Ok(EpochReport {
        epoch,
        avg_objective: objective_sum / cfg.eval_samples as f64,
        table,
    })
}

/// Run a full training job on a corpus of text sequences.
///
/// The alphabet is the set of characters observed in the corpus plus the
/// pad. After MLE pretraining, each epoch runs one REINFORCE step on the
/// (lambda-mixed) reward and, when lambda > 0, one discriminator round on a
/// fresh real/generated batch pair. Every epoch appends a report computed
/// from a fresh evaluation sample; epoch 0 is the pretrained baseline.
pub fn train(cfg: &TrainingConfig, corpus: &[String]) -> Result<TrainOutcome, SeqGenError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(SeqGenError::EmptyCorpus);
    }

    let alphabet = Alphabet::from_corpus(corpus.iter().map(String::as_str))?;
    let encoded: Vec<Vec<u8>> = corpus
        .iter()
        .map(|s| alphabet.encode_padded(s, cfg.seq_len))
        .collect::<Result<_, _>>()?;

    let mut policy = Policy::new(alphabet.clone(), cfg.order, cfg.seq_len);
    mle_pretrain(&mut policy, &encoded, cfg.pretrain_epochs, cfg.pretrain_lr)?;

    let objective = cfg.objective.build(&alphabet, corpus)?;
    let mut discriminator =
        (cfg.lambda > 0.0).then(|| Discriminator::new(cfg.ngram, alphabet.pad_index()));
    let mut discriminator_rounds = 0usize;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut reports = vec![evaluate(&policy, objective.as_ref(), cfg, 0)?];

    for epoch in 1..=cfg.epochs {
        match &discriminator {
            Some(disc) => {
                let reward = mixed_reward(cfg.lambda, disc, objective.as_ref())?;
                reinforce_step(&mut policy, cfg, reward.as_ref(), &mut rng);
            }
            None => {
                reinforce_step(&mut policy, cfg, objective.as_ref(), &mut rng);
            }
        }

        if let Some(disc) = &mut discriminator {
            let n = cfg.batch.min(encoded.len());
            let chosen = rand::seq::index::sample(&mut rng, encoded.len(), n);
            let real: Vec<Vec<u8>> = chosen.iter().map(|i| encoded[i].clone()).collect();
            let generated: Vec<Vec<u8>> =
                (0..cfg.batch).map(|_| policy.sample_sequence(&mut rng)).collect();
            discriminator_train(disc, &real, &generated, cfg.disc_epochs, cfg.disc_lr);
            discriminator_rounds += 1;
        }

        reports.push(evaluate(&policy, objective.as_ref(), cfg, epoch)?);
    }

    Ok(TrainOutcome {
        policy,
        discriminator,
        reports,
        discriminator_rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::super::rewards::Objective;
    use super::*;

    fn toy_corpus() -> Vec<String> {
        ["CCO", "CCC", "CCN", "CC(C)O", "CCOC", "CNC", "OCCO", "CCCC"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn toy_config(lambda: f64, epochs: usize) -> TrainingConfig {
        TrainingConfig {
            lambda,
            epochs,
            rollouts: 2,
            batch: 8,
            order: 3,
            ngram: 2,
            seq_len: 8,
            pretrain_epochs: 30,
            eval_samples: 50,
            objective: Objective::Motif("N".into()),
            seed: 11,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn zero_epochs_yields_baseline_only() {
        let outcome = train(&toy_config(0.0, 0), &toy_corpus()).unwrap();
        assert_eq!(outcome.reports.len(), 1);
        assert_eq!(outcome.reports[0].epoch, 0);
        assert_eq!(outcome.discriminator_rounds, 0);
        assert!(outcome.discriminator.is_none());
    }

    #[test]
    fn lambda_zero_never_trains_discriminator() {
        let outcome = train(&toy_config(0.0, 3), &toy_corpus()).unwrap();
        assert_eq!(outcome.discriminator_rounds, 0);
        assert!(outcome.discriminator.is_none());
        assert_eq!(outcome.reports.len(), 4);
    }

    #[test]
    fn lambda_one_trains_discriminator_and_still_reports_objective() {
        let outcome = train(&toy_config(1.0, 3), &toy_corpus()).unwrap();
        assert_eq!(outcome.discriminator_rounds, 3);
        assert!(outcome.discriminator.is_some());
        for report in &outcome.reports {
            assert!((0.0..=1.0).contains(&report.avg_objective));
        }
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = toy_config(0.5, 2);
        let a = train(&cfg, &toy_corpus()).unwrap();
        let b = train(&cfg, &toy_corpus()).unwrap();
        assert_eq!(a.reports, b.reports);
        assert_eq!(a.policy, b.policy);
        assert_eq!(a.discriminator, b.discriminator);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            train(&toy_config(0.0, 1), &[]),
            Err(SeqGenError::EmptyCorpus)
        ));
    }

    #[test]
    fn reports_serialize_as_flat_json_lines() {
        let outcome = train(&toy_config(0.0, 1), &toy_corpus()).unwrap();
        let line = serde_json::to_string(&outcome.reports[0]).unwrap();
        let value: serde_json::Value = serde_json::from_str(&line).unwrap();
        for key in [
            "epoch",
            "avg_objective",
            "label",
            "prop_valid",
            "avg_score",
            "avg_internal_diversity",
            "prop_above_threshold",
            "internal_diversity_above_threshold",
            "threshold",
            "n_total",
            "n_valid",
            "n_above",
        ] {
            assert!(value.get(key).is_some(), "missing {key} in {line}");
        }
    }
}
