//! Desk-scale sequence-generation lab.
//!
//! The generator is an order-k table policy: a softmax logit vector per
//! observed context of up to k preceding symbols, uniform on unseen
//! contexts. Sequences have fixed length T with an absorbing pad symbol
//! `'_'`. The discriminator is a logistic model over pad-free n-grams.
//! Training combines MLE pretraining, REINFORCE with N-time Monte Carlo
//! rollout value estimates, and an optional lambda-mixed adversarial reward:
//! lambda 0 is plain objective RL, lambda 1 is a SeqGAN.
//!
//! Everything is small enough to test against exhaustive enumeration, which
//! is the point: the training dynamics (objective goes up, diversity of the
//! qualifying outputs goes down) are qualitatively reproducible on a desk.

mod checkpoint;
mod config;
mod discriminator;
mod policy;
mod rewards;
mod rollout;
mod train;

pub use checkpoint::{read_checkpoint, read_checkpoint_file, write_checkpoint, write_checkpoint_file};
pub use config::{parse_training_config, TrainingConfig};
pub use discriminator::{discriminator_train, Discriminator};
pub use policy::{mle_pretrain, Alphabet, Policy, PAD};
pub use rewards::{
    mixed_reward, power_mean_combine, BoxedReward, Objective, RewardFn, SimilarityPenalty,
};
pub use rollout::{mc_rollout_q, reinforce_step, StepStats};
pub use train::{train, EpochReport, TrainOutcome};

#[derive(Debug, thiserror::Error)]
pub enum SeqGenError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("symbol {symbol:?} is not in the alphabet")]
    SymbolNotInAlphabet { symbol: char },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("config file line {line}: {detail}")]
    BadConfigFile { line: usize, detail: String },
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Scoring(#[from] crate::scoring::ScoringError),
}
