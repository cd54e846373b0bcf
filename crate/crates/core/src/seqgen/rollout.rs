//! Monte Carlo action-value estimation and the REINFORCE update.

use std::collections::HashMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::TrainingConfig;
use super::policy::Policy;
use crate::smiles;

/// Action value Q(s = Y_{1:t-1}, a = y_t) of a prefix that includes the
/// action as its last symbol.
///
/// For a full-length prefix the reward is returned exactly — no sampling is
/// involved. Otherwise the prefix is completed N times under the rollout
/// policy and the mean reward is returned.
pub fn mc_rollout_q<F, R>(policy: &Policy, prefix: &[u8], reward: &F, n: usize, rng: &mut R) -> f64
where
    F: Fn(&[u8]) -> f64 + ?Sized,
    R: Rng,
{
    debug_assert!(prefix.len() <= policy.seq_len());
    if prefix.len() == policy.seq_len() {
        return reward(prefix);
    }
    let mut total = 0.0;
    for _ in 0..n.max(1) {
        let completed = policy.sample_completion(prefix, rng);
        total += reward(&completed);
    }
    total / n.max(1) as f64
}

/// Batch statistics of one REINFORCE step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub avg_reward: f64,
    pub avg_valid: f64,
}

/// One REINFORCE step: sample a batch, estimate per-position action values
/// by Monte Carlo rollout, and ascend `sum_t Q_t * grad log G(y_t | ctx)`.
///
/// Rollouts use the policy as frozen at the start of the step. Each batch
/// item gets its own seed drawn up front from `rng`, and per-item gradients
/// are merged in batch order, so the result does not depend on how the
/// parallel iterator splits the work.
pub fn reinforce_step<F>(
    policy: &mut Policy,
    cfg: &TrainingConfig,
    reward: &F,
    rng: &mut ChaCha8Rng,
) -> StepStats
where
    F: Fn(&[u8]) -> f64 + Sync + ?Sized,
{
    let pad = policy.alphabet().pad_index();
    let batch: Vec<Vec<u8>> = (0..cfg.batch).map(|_| policy.sample_sequence(rng)).collect();
    let seeds: Vec<u64> = (0..batch.len()).map(|_| rng.next_u64()).collect();

    let frozen: &Policy = policy;
    let results: Vec<(HashMap<Vec<u8>, Vec<f64>>, f64)> = batch
        .par_iter()
        .zip(&seeds)
        .map(|(seq, &seed)| {
            let mut rollout_rng = ChaCha8Rng::seed_from_u64(seed);
            let mut grad: HashMap<Vec<u8>, Vec<f64>> = HashMap::new();
            for t in 0..seq.len() {
                if t > 0 && seq[t - 1] == pad {
                    break; // absorbed: no decision was taken here
                }
                let q = mc_rollout_q(frozen, &seq[..=t], reward, cfg.rollouts, &mut rollout_rng);
                frozen.accumulate_score_gradient(&seq[..=t], q, &mut grad);
            }
            (grad, reward(seq))
        })
        .collect();

    let mut merged: HashMap<Vec<u8>, Vec<f64>> = HashMap::new();
    let mut reward_sum = 0.0;
    for (grad, r) in results {
        reward_sum += r;
        for (ctx, g) in grad {
            match merged.get_mut(&ctx) {
                Some(acc) => {
                    for (a, b) in acc.iter_mut().zip(&g) {
                        *a += b;
                    }
                }
                None => {
                    merged.insert(ctx, g);
                }
            }
        }
    }
    policy.apply_logit_update(&merged, cfg.learning_rate / cfg.batch as f64);

    let n_valid = batch
        .iter()
        .filter(|seq| smiles::validate(&policy.alphabet().decode_trimmed(seq)))
        .count();
    StepStats {
        avg_reward: reward_sum / cfg.batch as f64,
        avg_valid: n_valid as f64 / cfg.batch as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::super::policy::{Alphabet, PAD};
    use super::*;

    fn toy_policy() -> Policy {
        Policy::new(Alphabet::new(vec!['A', 'B', PAD]).unwrap(), 2, 2)
    }

    #[test]
    fn terminal_q_is_exact_for_any_n() {
        let policy = toy_policy();
        let reward: Box<dyn Fn(&[u8]) -> f64 + Sync> = Box::new(|seq: &[u8]| {
            if seq == [0, 1] {
                0.75
            } else {
                0.25
            }
        });
        for n in [1usize, 10, 1000] {
            for seed in 0..5 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let q = mc_rollout_q(&policy, &[0, 1], &reward, n, &mut rng);
                assert_eq!(q, 0.75);
            }
        }
    }

    #[test]
    fn rollout_matches_analytic_expectation() {
        // alphabet {A,B} football: uniform policy emits A/B/_ each 1/3;
        // reward 1 iff "AB", so Q("A") = P(next = B) = 1/3
        let policy = toy_policy();
        let reward: Box<dyn Fn(&[u8]) -> f64 + Sync> =
            Box::new(|seq: &[u8]| f64::from(seq == [0, 1]));
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let q = mc_rollout_q(&policy, &[0], &reward, 30_000, &mut rng);
        assert!((q - 1.0 / 3.0).abs() < 0.01, "q = {q}");
    }

    #[test]
    fn zero_reward_leaves_distributions_unchanged() {
        let mut policy = toy_policy();
        let cfg = TrainingConfig {
            batch: 8,
            rollouts: 2,
            learning_rate: 0.5,
            ..TrainingConfig::default()
        };
        let reward: Box<dyn Fn(&[u8]) -> f64 + Sync> = Box::new(|_: &[u8]| 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        reinforce_step(&mut policy, &cfg, &reward, &mut rng);
        for ctx in [&[][..], &[0][..], &[1][..]] {
            let p = policy.probabilities(ctx);
            for x in p {
                assert!((x - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_reward_raises_sampled_symbols() {
        // single-context (order 0) policy, one-position sequences: after one
        // step with constant reward c, logit of each sampled symbol grew by
        // c * (1 - p) * (count/batch) relative to unsampled ones
        let alphabet = Alphabet::new(vec!['A', 'B', PAD]).unwrap();
        let mut policy = Policy::new(alphabet, 0, 1);
        let cfg = TrainingConfig {
            batch: 16,
            rollouts: 1,
            learning_rate: 1.0,
            ..TrainingConfig::default()
        };
        let reward: Box<dyn Fn(&[u8]) -> f64 + Sync> = Box::new(|_: &[u8]| 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        reinforce_step(&mut policy, &cfg, &reward, &mut rng);

        let logits = &policy.logits()[&Vec::new()];
        // gradient per sample: 1 * (indicator - 1/3); summed over the batch
        // the mean logit update is zero and sampled symbols strictly gained
        let mean: f64 = logits.iter().sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12);
        assert!(logits.iter().any(|&l| l > 0.0));
        // probabilities still a simplex
        let p = policy.probabilities(&[]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reinforce_is_deterministic_given_seed() {
        let cfg = TrainingConfig {
            batch: 6,
            rollouts: 3,
            learning_rate: 0.7,
            ..TrainingConfig::default()
        };
        let reward: Box<dyn Fn(&[u8]) -> f64 + Sync> =
            Box::new(|seq: &[u8]| f64::from(seq[0] == 1));
        let run = || {
            let mut policy = toy_policy();
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let stats = reinforce_step(&mut policy, &cfg, &reward, &mut rng);
            (policy, stats)
        };
        let (p1, s1) = run();
        let (p2, s2) = run();
        assert_eq!(s1, s2);
        assert_eq!(p1.logits().len(), p2.logits().len());
        for (ctx, l1) in p1.logits() {
            assert_eq!(&p2.logits()[ctx], l1);
        }
    }
}
