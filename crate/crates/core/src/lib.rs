//! Chemical-diversity toolkit: SMILES parsing and canonicalization, Morgan
//! circular fingerprints, Tanimoto diversity metrics over molecule sets, and a
//! desk-scale sequence-generation lab (table policy + n-gram discriminator)
//! for studying reward-driven diversity collapse.
//!
//! The crate is organized around five modules:
//!
//! - [`smiles`] — lex/parse/validate SMILES into molecular graphs, write them
//!   back out, canonicalize, and score conciseness.
//! - [`fingerprint`] — Morgan circular fingerprints and Tanimoto
//!   similarity/distance.
//! - [`diversity`] — internal/external diversity and Tanimoto variance of
//!   molecule sets, subsampled estimates, and the generated-vs-natural
//!   diversity challenge comparison.
//! - [`scoring`] — validity/novelty/conciseness/composite scorers, TSV score
//!   ingestion, and table-style report assembly.
//! - [`seqgen`] — order-k table policy over a character alphabet, MLE
//!   pretraining, REINFORCE with N-time Monte Carlo rollouts, an n-gram
//!   logistic discriminator, and the lambda-mixed adversarial reward.
//!
//! All metric computations are deterministic: pairwise Tanimoto sums are
//! accumulated in 128-bit fixed point, so results are bit-identical across
//! thread counts and run-to-run.

pub mod diversity;
pub mod fingerprint;
pub mod scoring;
pub mod seqgen;
pub mod smiles;

pub use diversity::{
    challenge_compare, external_diversity, internal_diversity, subsampled_internal_diversity,
    tanimoto_variance, ChallengeVerdict, DiversityEstimate, DiversityReport, MoleculeRecord,
    MoleculeSet,
};
pub use fingerprint::{
    morgan_fingerprint, tanimoto_distance, tanimoto_similarity, Fingerprint, FingerprintConfig,
};
pub use scoring::{
    druglikeness, load_scores, novelty, table_report, Druglikeness, TableReport, TrainingSetIndex,
};
pub use smiles::{canonicalize, conciseness, parse, random_rewrite, validate, Molecule, ParseError};
