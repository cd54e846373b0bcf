//! Training configuration and the flat key=value config file format.

use std::collections::BTreeMap;

use super::rewards::Objective;
use super::SeqGenError;

/// Everything a training run needs. The config file keys are the snake_case
/// field names below, except `seq_len` which is spelled `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    /// Adversarial mixing weight: 0 is plain RL, 1 is a SeqGAN.
    pub lambda: f64,
    /// N of the N-time Monte Carlo rollout.
    pub rollouts: usize,
    pub learning_rate: f64,
    /// RL epochs (one REINFORCE step plus one discriminator round each).
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    /// Context length k of the table policy.
    pub order: usize,
    /// n-gram size of the discriminator.
    pub ngram: usize,
    /// Fixed sequence length T.
    pub seq_len: usize,
    pub objective: Objective,
    pub pretrain_epochs: usize,
    pub pretrain_lr: f64,
    /// Score threshold used by the per-epoch reports.
    pub threshold: f64,
    /// Fresh sample size for per-epoch evaluation.
    pub eval_samples: usize,
    /// Discriminator epochs per RL epoch.
    pub disc_epochs: usize,
    pub disc_lr: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            lambda: 0.04,
            rollouts: 8,
            learning_rate: 0.5,
            epochs: 10,
            batch: 16,
            seed: 0,
            order: 6,
            ngram: 3,
            seq_len: 40,
            objective: Objective::Conciseness,
            pretrain_epochs: 150,
            pretrain_lr: 1.0,
            threshold: 0.8,
            eval_samples: 1000,
            disc_epochs: 2,
            disc_lr: 0.5,
        }
    }
}

impl TrainingConfig {
    /// Presets mirroring the usual run names.
    pub fn preset(name: &str) -> Result<TrainingConfig, SeqGenError> {
        let lambda = match name {
            "rl" => 0.0,
            "organ-0.04" => 0.04,
            "organ-0.5" => 0.5,
            "seqgan" => 1.0,
            other => {
                return Err(SeqGenError::InvalidConfig(format!(
                    "unknown preset {other:?} (expected rl, organ-0.04, organ-0.5, seqgan)"
                )))
            }
        };
        Ok(TrainingConfig {
            lambda,
            ..TrainingConfig::default()
        })
    }

    pub fn validate(&self) -> Result<(), SeqGenError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(SeqGenError::InvalidConfig(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if self.rollouts == 0 {
            return Err(SeqGenError::InvalidConfig("rollouts must be >= 1".into()));
        }
        if self.batch == 0 {
            return Err(SeqGenError::InvalidConfig("batch must be >= 1".into()));
        }
        if self.seq_len == 0 {
            return Err(SeqGenError::InvalidConfig("T must be >= 1".into()));
        }
        if self.ngram == 0 {
            return Err(SeqGenError::InvalidConfig("ngram must be >= 1".into()));
        }
        if self.eval_samples == 0 {
            return Err(SeqGenError::InvalidConfig("eval_samples must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.pretrain_lr > 0.0) || !(self.disc_lr > 0.0) {
            return Err(SeqGenError::InvalidConfig(
                "learning rates must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Flat view of the resolved config, for manifests.
    pub fn as_key_values(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        map.insert("lambda".into(), self.lambda.to_string());
        map.insert("rollouts".into(), self.rollouts.to_string());
        map.insert("learning_rate".into(), self.learning_rate.to_string());
        map.insert("epochs".into(), self.epochs.to_string());
        map.insert("batch".into(), self.batch.to_string());
        map.insert("seed".into(), self.seed.to_string());
        map.insert("order".into(), self.order.to_string());
        map.insert("ngram".into(), self.ngram.to_string());
        map.insert("T".into(), self.seq_len.to_string());
        map.insert("objective".into(), self.objective.to_string());
        map.insert("pretrain_epochs".into(), self.pretrain_epochs.to_string());
        map.insert("pretrain_lr".into(), self.pretrain_lr.to_string());
        map.insert("threshold".into(), self.threshold.to_string());
        map.insert("eval_samples".into(), self.eval_samples.to_string());
        map.insert("disc_epochs".into(), self.disc_epochs.to_string());
        map.insert("disc_lr".into(), self.disc_lr.to_string());
        map
    }
}

/// Parse the flat key=value config format. Blank lines and `#` comments are
/// skipped. A `preset=` line, if present, is applied first; later keys
/// override it regardless of position.
pub fn parse_training_config(text: &str) -> Result<TrainingConfig, SeqGenError> {
    fn entry(line_no: usize, line: &str) -> Result<Option<(String, String)>, SeqGenError> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Ok(None);
        }
        let (key, value) = line.split_once('=').ok_or(SeqGenError::BadConfigFile {
            line: line_no,
            detail: "expected key=value".into(),
        })?;
        Ok(Some((key.trim().to_string(), value.trim().to_string())))
    }

    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(kv) = entry(i + 1, line)? {
            entries.push((i + 1, kv.0, kv.1));
        }
    }

    let mut cfg = TrainingConfig::default();
    if let Some((line, _, value)) = entries.iter().find(|(_, k, _)| k == "preset") {
        cfg = TrainingConfig::preset(value).map_err(|e| SeqGenError::BadConfigFile {
            line: *line,
            detail: e.to_string(),
        })?;
    }

    fn parse_as<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, SeqGenError> {
        value.parse().map_err(|_| SeqGenError::BadConfigFile {
            line,
            detail: format!("bad value {value:?} for {key}"),
        })
    }

    for (line, key, value) in &entries {
        let (line, value) = (*line, value.as_str());
        match key.as_str() {
            "preset" => {}
            "lambda" => cfg.lambda = parse_as(line, key, value)?,
            "rollouts" => cfg.rollouts = parse_as(line, key, value)?,
            "learning_rate" => cfg.learning_rate = parse_as(line, key, value)?,
            "epochs" => cfg.epochs = parse_as(line, key, value)?,
            "batch" => cfg.batch = parse_as(line, key, value)?,
            "seed" => cfg.seed = parse_as(line, key, value)?,
            "order" => cfg.order = parse_as(line, key, value)?,
            "ngram" => cfg.ngram = parse_as(line, key, value)?,
            "T" => cfg.seq_len = parse_as(line, key, value)?,
            "objective" => {
                cfg.objective = value.parse().map_err(|e: SeqGenError| SeqGenError::BadConfigFile {
                    line,
                    detail: e.to_string(),
                })?
            }
            "pretrain_epochs" => cfg.pretrain_epochs = parse_as(line, key, value)?,
            "pretrain_lr" => cfg.pretrain_lr = parse_as(line, key, value)?,
            "threshold" => cfg.threshold = parse_as(line, key, value)?,
            "eval_samples" => cfg.eval_samples = parse_as(line, key, value)?,
            "disc_epochs" => cfg.disc_epochs = parse_as(line, key, value)?,
            "disc_lr" => cfg.disc_lr = parse_as(line, key, value)?,
            other => {
                return Err(SeqGenError::BadConfigFile {
                    line,
                    detail: format!("unknown key {other:?}"),
                })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
