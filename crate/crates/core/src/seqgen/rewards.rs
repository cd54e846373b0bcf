//! Reward functions: named objectives, the lambda-mixed adversarial reward,
//! the power-mean combiner, and the similarity penalty wrapper.

use std::str::FromStr;
use std::sync::RwLock;

use super::discriminator::Discriminator;
use super::policy::Alphabet;
use super::SeqGenError;
use crate::diversity::MoleculeSet;
use crate::fingerprint::{
    morgan_fingerprint, similarity_unchecked, Fingerprint, FingerprintConfig,
};
use crate::scoring::{self, TrainingSetIndex};
use crate::smiles;

/// Rewards map an encoded sequence (with padding) to a value, and must be
/// shareable across rollout workers.
pub type RewardFn<'a> = dyn Fn(&[u8]) -> f64 + Sync + 'a;
pub type BoxedReward<'a> = Box<RewardFn<'a>>;

/// Named training objectives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Objective {
    /// 1 when the decoded text contains the pattern, else 0.
    Motif(String),
    /// Conciseness score of the decoded text (0 for invalid SMILES).
    Conciseness,
    /// Mean of novelty and conciseness against the training corpus — the
    /// computable part of the druglikeness composite.
    NoveltyComposite,
}

impl FromStr for Objective {
    type Err = SeqGenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(pattern) = s.strip_prefix("motif:") {
            if pattern.is_empty() {
                return Err(SeqGenError::InvalidConfig("motif pattern is empty".into()));
            }
            return Ok(Objective::Motif(pattern.to_string()));
        }
        match s {
            "conciseness" => Ok(Objective::Conciseness),
            "novelty_composite" => Ok(Objective::NoveltyComposite),
            other => Err(SeqGenError::InvalidConfig(format!(
                "unknown objective {other:?} (expected motif:<pattern>, conciseness, or novelty_composite)"
            ))),
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Objective::Motif(p) => write!(f, "motif:{p}"),
            Objective::Conciseness => write!(f, "conciseness"),
            Objective::NoveltyComposite => write!(f, "novelty_composite"),
        }
    }
}

impl Objective {
    /// Materialize the objective as a reward closure. `corpus` is only used
    /// by `NoveltyComposite`, which builds a canonical-form index from it.
    pub fn build(
        &self,
        alphabet: &Alphabet,
        corpus: &[String],
    ) -> Result<BoxedReward<'static>, SeqGenError> {
        let alphabet = alphabet.clone();
        match self {
            Objective::Motif(pattern) => {
                let pattern = pattern.clone();
                Ok(Box::new(move |seq: &[u8]| {
                    f64::from(alphabet.decode_trimmed(seq).contains(&pattern))
                }))
            }
            Objective::Conciseness => Ok(Box::new(move |seq: &[u8]| {
                smiles::conciseness(&alphabet.decode_trimmed(seq))
            })),
            Objective::NoveltyComposite => {
                let index = TrainingSetIndex::from_smiles(corpus.iter().map(String::as_str))?;
                Ok(Box::new(move |seq: &[u8]| {
                    let text = alphabet.decode_trimmed(seq);
                    scoring::druglikeness(&text, &index, None, None)
                        .map(|d| d.value)
                        .unwrap_or(0.0)
                }))
            }
        }
    }
}

/// Lambda-mixed reward: `lambda * D(seq) + (1 - lambda) * objective(seq)`.
/// Lambda 0 never consults the discriminator; lambda 1 never consults the
/// objective (a SeqGAN).
pub fn mixed_reward<'a>(
    lambda: f64,
    disc: &'a Discriminator,
    objective: &'a RewardFn<'a>,
) -> Result<BoxedReward<'a>, SeqGenError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(SeqGenError::InvalidConfig(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    if lambda == 0.0 {
        Ok(Box::new(move |seq: &[u8]| objective(seq)))
    } else if lambda == 1.0 {
        Ok(Box::new(move |seq: &[u8]| disc.score(seq)))
    } else {
        Ok(Box::new(move |seq: &[u8]| {
            lambda * disc.score(seq) + (1.0 - lambda) * objective(seq)
        }))
    }
}

/// Power-mean combiner `(x^l + y^l)^(1/l)`; converges to min(x, y) as
/// l -> -inf. Requires positive inputs and nonzero l.
pub fn power_mean_combine(x: f64, y: f64, lambda: f64) -> Result<f64, SeqGenError> {
    if x <= 0.0 || y <= 0.0 {
        return Err(SeqGenError::InvalidConfig(format!(
            "power mean needs positive inputs, got ({x}, {y})"
        )));
    }
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(SeqGenError::InvalidConfig(
            "power mean exponent must be finite and nonzero".into(),
        ));
    }
    Ok((x.powf(lambda) + y.powf(lambda)).powf(1.0 / lambda))
}

/// Reward wrapper that discourages re-generating molecules similar to ones
/// already archived: `max(0, base(seq) - alpha * max_archive Ts)` for valid
/// SMILES outputs. The archive can grow during training via
/// [`SimilarityPenalty::absorb_if_qualifying`]; reads and writes are
/// internally locked so the reward stays usable from parallel rollouts.
pub struct SimilarityPenalty<'a> {
    base: BoxedReward<'a>,
    alphabet: Alphabet,
    config: FingerprintConfig,
    alpha: f64,
    archive: RwLock<Vec<Fingerprint>>,
}

impl<'a> SimilarityPenalty<'a> {
    /// Wrap a reward. Valid archive records must already be fingerprinted.
    pub fn wrap(
        base: BoxedReward<'a>,
        archive: &MoleculeSet,
        alphabet: Alphabet,
        config: FingerprintConfig,
        alpha: f64,
    ) -> Result<SimilarityPenalty<'a>, SeqGenError> {
        if alpha < 0.0 {
            return Err(SeqGenError::InvalidConfig(format!(
                "alpha must be non-negative, got {alpha}"
            )));
        }
        let mut fps = Vec::new();
        for (i, rec) in archive.records().iter().enumerate() {
            if rec.is_valid() {
                let fp = rec.fingerprint.clone().ok_or_else(|| {
                    SeqGenError::InvalidConfig(format!(
                        "archive record {i} of '{}' is not fingerprinted",
                        archive.label
                    ))
                })?;
                fps.push(fp);
            }
        }
        Ok(SimilarityPenalty {
            base,
            alphabet,
            config,
            alpha,
            archive: RwLock::new(fps),
        })
    }

    pub fn archive_len(&self) -> usize {
        self.archive.read().unwrap().len()
    }

    /// The wrapped reward.
    pub fn reward(&self, seq: &[u8]) -> f64 {
        let base = (self.base)(seq);
        if self.alpha == 0.0 {
            return base;
        }
        let text = self.alphabet.decode_trimmed(seq);
        let Ok(mol) = smiles::parse(&text) else {
            return base;
        };
        let fp = morgan_fingerprint(&mol, &self.config);
        let archive = self.archive.read().unwrap();
        let max_sim = archive
            .iter()
            .map(|a| similarity_unchecked(a, &fp))
            .fold(0.0, f64::max);
        (base - self.alpha * max_sim).max(0.0)
    }

    /// Archive the molecule behind `seq` when it is valid and its score
    /// clears the threshold. Returns true when something was added.
    pub fn absorb_if_qualifying(&self, seq: &[u8], score: f64, threshold: f64) -> bool {
        if score < threshold {
            return false;
        }
        let text = self.alphabet.decode_trimmed(seq);
        let Ok(mol) = smiles::parse(&text) else {
            return false;
        };
        let fp = morgan_fingerprint(&mol, &self.config);
        self.archive.write().unwrap().push(fp);
        true
    }
}
