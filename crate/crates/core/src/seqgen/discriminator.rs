//! Logistic n-gram discriminator: real-vs-generated sequence classifier.

use std::collections::HashMap;

/// Linear model over pad-free n-gram counts, squashed through the logistic
/// function. Excluding n-grams that touch the pad makes the score invariant
/// to how much trailing padding a sequence carries.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    n: usize,
    pad: u8,
    weights: HashMap<Vec<u8>, f64>,
    bias: f64,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

impl Discriminator {
    pub fn new(n: usize, pad: u8) -> Discriminator {
        Discriminator {
            n: n.max(1),
            pad,
            weights: HashMap::new(),
            bias: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pad(&self) -> u8 {
        self.pad
    }

    pub(crate) fn weights(&self) -> &HashMap<Vec<u8>, f64> {
        &self.weights
    }

    pub(crate) fn bias(&self) -> f64 {
        self.bias
    }

    pub(crate) fn from_parts(
        n: usize,
        pad: u8,
        weights: HashMap<Vec<u8>, f64>,
        bias: f64,
    ) -> Discriminator {
        Discriminator {
            n,
            pad,
            weights,
            bias,
        }
    }

    fn ngrams<'s>(&self, seq: &'s [u8]) -> impl Iterator<Item = &'s [u8]> {
        let (n, pad) = (self.n, self.pad);
        seq.windows(n).filter(move |w| !w.contains(&pad))
    }

    fn logit(&self, seq: &[u8]) -> f64 {
        let mut z = self.bias;
        for gram in self.ngrams(seq) {
            if let Some(w) = self.weights.get(gram) {
                z += w;
            }
        }
        z.clamp(-30.0, 30.0)
    }

    /// Probability that the sequence comes from the training data, in (0, 1).
    pub fn score(&self, seq: &[u8]) -> f64 {
        1.0 / (1.0 + (-self.logit(seq)).exp())
    }

    /// Discriminator objective: E_real[log D] + E_gen[log(1 - D)], means
    /// taken per corpus. Computed through softplus so it never hits -inf.
    pub fn objective(&self, real: &[Vec<u8>], generated: &[Vec<u8>]) -> f64 {
        let real_term: f64 = real
            .iter()
            .map(|s| -softplus(-self.logit(s)))
            .sum::<f64>()
            / real.len().max(1) as f64;
        let gen_term: f64 = generated
            .iter()
            .map(|s| -softplus(self.logit(s)))
            .sum::<f64>()
            / generated.len().max(1) as f64;
        real_term + gen_term
    }

    /// Mean-gradient of the objective.
    fn gradient(&self, real: &[Vec<u8>], generated: &[Vec<u8>]) -> (HashMap<Vec<u8>, f64>, f64) {
        let mut grad: HashMap<Vec<u8>, f64> = HashMap::new();
        let mut grad_bias = 0.0;
        let real_w = 1.0 / real.len().max(1) as f64;
        for seq in real {
            let coeff = (1.0 - self.score(seq)) * real_w;
            grad_bias += coeff;
            for gram in self.ngrams(seq) {
                *grad.entry(gram.to_vec()).or_insert(0.0) += coeff;
            }
        }
        let gen_w = 1.0 / generated.len().max(1) as f64;
        for seq in generated {
            let coeff = -self.score(seq) * gen_w;
            grad_bias += coeff;
            for gram in self.ngrams(seq) {
                *grad.entry(gram.to_vec()).or_insert(0.0) += coeff;
            }
        }
        (grad, grad_bias)
    }

    fn apply(&mut self, grad: &HashMap<Vec<u8>, f64>, grad_bias: f64, step: f64) {
        for (gram, g) in grad {
            *self.weights.entry(gram.clone()).or_insert(0.0) += step * g;
        }
        self.bias += step * grad_bias;
    }

    /// Held-out accuracy at the 0.5 decision boundary.
    pub fn accuracy(&self, real: &[Vec<u8>], generated: &[Vec<u8>]) -> f64 {
        let hits = real.iter().filter(|s| self.score(s) > 0.5).count()
            + generated.iter().filter(|s| self.score(s) <= 0.5).count();
        hits as f64 / (real.len() + generated.len()).max(1) as f64
    }
}

/// Train the discriminator by gradient ascent on its objective. Each epoch
/// backtracks the step until the objective does not decrease, so the
/// objective on the training corpora is non-decreasing across the call.
pub fn discriminator_train(
    disc: &mut Discriminator,
    real: &[Vec<u8>],
    generated: &[Vec<u8>],
    epochs: usize,
    learning_rate: f64,
) {
    for _ in 0..epochs {
        let before = disc.objective(real, generated);
        let snapshot = disc.clone();
        let (grad, grad_bias) = disc.gradient(real, generated);
        let mut step = learning_rate;
        let mut improved = false;
        for _ in 0..30 {
            disc.apply(&grad, grad_bias, step);
            if disc.objective(real, generated) >= before {
                improved = true;
                break;
            }
            *disc = snapshot.clone();
            step *= 0.5;
        }
        if !improved {
            *disc = snapshot;
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAD: u8 = 2;

    #[test]
    fn fresh_discriminator_scores_half() {
        let d = Discriminator::new(3, PAD);
        assert_eq!(d.score(&[0, 1, 0, 1]), 0.5);
        assert_eq!(d.score(&[]), 0.5);
    }

    #[test]
    fn objective_of_uninformative_discriminator() {
        let d = Discriminator::new(3, PAD);
        let real = vec![vec![0, 0, 0, 0]];
        let generated = vec![vec![1, 1, 1, 1]];
        let expected = 2.0 * 0.5f64.ln();
        assert!((d.objective(&real, &generated) - expected).abs() < 1e-12);
    }

    #[test]
    fn score_ignores_pad_tail_length() {
        let mut d = Discriminator::new(2, PAD);
        d.weights.insert(vec![0, 1], 1.5);
        let short = [0, 1, PAD, PAD];
        let long = [0, 1, PAD, PAD, PAD, PAD, PAD];
        assert_eq!(d.score(&short), d.score(&long));
        // and a pad-straddling window contributes nothing
        let padded = [0, PAD, 1, PAD];
        assert_eq!(d.score(&padded), 0.5);
    }

    #[test]
    fn training_improves_objective_monotonically() {
        let real: Vec<Vec<u8>> = vec![vec![0, 0, 0, 0], vec![0, 0, 0, PAD], vec![0, 0, PAD, PAD]];
        let generated: Vec<Vec<u8>> = vec![vec![1, 1, 1, 1], vec![1, 1, 1, PAD], vec![1, 1, PAD, PAD]];
        let mut d = Discriminator::new(2, PAD);
        let mut last = d.objective(&real, &generated);
        for _ in 0..20 {
            discriminator_train(&mut d, &real, &generated, 1, 0.5);
            let now = d.objective(&real, &generated);
            assert!(now >= last, "{now} < {last}");
            last = now;
        }
        assert!(d.accuracy(&real, &generated) >= 0.95);
    }

    #[test]
    fn identical_corpora_stay_near_half() {
        let corpus: Vec<Vec<u8>> = vec![vec![0, 1, 0, 1], vec![1, 0, 1, 0]];
        let mut d = Discriminator::new(2, PAD);
        discriminator_train(&mut d, &corpus, &corpus.clone(), 50, 0.5);
        for seq in &corpus {
            assert!((d.score(seq) - 0.5).abs() < 0.05);
        }
        let objective = d.objective(&corpus, &corpus);
        assert!((objective - 2.0 * 0.5f64.ln()).abs() < 0.05);
    }
}
