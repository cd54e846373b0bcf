//! Alphabet, table policy, sequence sampling, and MLE pretraining.

use std::collections::HashMap;

use rand::Rng;

use super::SeqGenError;

/// The absorbing pad symbol.
pub const PAD: char = '_';

/// Ordered symbol set including the pad. Sequences are stored as `u8`
/// indices into this alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<char>,
    pad: u8,
}

impl Alphabet {
    pub fn new(symbols: Vec<char>) -> Result<Alphabet, SeqGenError> {
        if symbols.len() < 2 {
            return Err(SeqGenError::InvalidConfig(
                "alphabet needs at least two symbols".into(),
            ));
        }
        if symbols.len() > 255 {
            return Err(SeqGenError::InvalidConfig("alphabet too large".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &c in &symbols {
            if !seen.insert(c) {
                return Err(SeqGenError::InvalidConfig(format!(
                    "duplicate symbol {c:?} in alphabet"
                )));
            }
        }
        let pad = symbols
            .iter()
            .position(|&c| c == PAD)
            .ok_or_else(|| SeqGenError::InvalidConfig("alphabet must contain '_'".into()))?;
        Ok(Alphabet {
            symbols,
            pad: pad as u8,
        })
    }

    /// Distinct characters observed in the corpus, sorted, plus the pad.
    pub fn from_corpus<'a>(texts: impl IntoIterator<Item = &'a str>) -> Result<Alphabet, SeqGenError> {
        let mut chars: Vec<char> = texts
            .into_iter()
            .flat_map(|t| t.chars())
            .collect::<std::collections::BTreeSet<char>>()
            .into_iter()
            .collect();
        if !chars.contains(&PAD) {
            chars.push(PAD);
        }
        Alphabet::new(chars)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn pad_index(&self) -> u8 {
        self.pad
    }

    pub fn index_of(&self, c: char) -> Option<u8> {
        self.symbols.iter().position(|&s| s == c).map(|i| i as u8)
    }

    /// Encode to exactly `len` symbols, padding with `'_'`. Input longer
    /// than `len` is truncated.
    pub fn encode_padded(&self, text: &str, len: usize) -> Result<Vec<u8>, SeqGenError> {
        let mut out = Vec::with_capacity(len);
        for c in text.chars().take(len) {
            out.push(
                self.index_of(c)
                    .ok_or(SeqGenError::SymbolNotInAlphabet { symbol: c })?,
            );
        }
        out.resize(len, self.pad);
        Ok(out)
    }

    /// Decode, dropping everything from the first pad on.
    pub fn decode_trimmed(&self, seq: &[u8]) -> String {
        seq.iter()
            .take_while(|&&s| s != self.pad)
            .map(|&s| self.symbols[s as usize])
            .collect()
    }
}

/// Order-k table policy over fixed-length sequences.
///
/// Sampling probabilities are the softmax of a per-context logit vector;
/// contexts never touched by training fall back to uniform. The pad is
/// absorbing: once emitted, the rest of the sequence is pad with no further
/// sampling decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    alphabet: Alphabet,
    order: usize,
    seq_len: usize,
    logits: HashMap<Vec<u8>, Vec<f64>>,
}

impl Policy {
    pub fn new(alphabet: Alphabet, order: usize, seq_len: usize) -> Policy {
        Policy {
            alphabet,
            order,
            seq_len,
            logits: HashMap::new(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    /// Raw logit table: context -> per-symbol logits.
    pub fn logits(&self) -> &HashMap<Vec<u8>, Vec<f64>> {
        &self.logits
    }

    /// Mutable access for direct logit surgery (tests, custom updates).
    pub fn logits_mut(&mut self) -> &mut HashMap<Vec<u8>, Vec<f64>> {
        &mut self.logits
    }

    pub(crate) fn from_parts(
        alphabet: Alphabet,
        order: usize,
        seq_len: usize,
        logits: HashMap<Vec<u8>, Vec<f64>>,
    ) -> Policy {
        Policy {
            alphabet,
            order,
            seq_len,
            logits,
        }
    }

    /// The context the next symbol is conditioned on: the last `order`
    /// symbols of the prefix.
    pub fn context_of<'s>(&self, prefix: &'s [u8]) -> &'s [u8] {
        &prefix[prefix.len().saturating_sub(self.order)..]
    }

    /// Next-symbol distribution for a context. Strictly positive, sums to 1.
    pub fn probabilities(&self, context: &[u8]) -> Vec<f64> {
        match self.logits.get(context) {
            Some(logits) => softmax(logits),
            None => vec![1.0 / self.alphabet.len() as f64; self.alphabet.len()],
        }
    }

    /// Sample one full sequence of length T with absorbing pad.
    pub fn sample_sequence<R: Rng>(&self, rng: &mut R) -> Vec<u8> {
        let mut seq = Vec::with_capacity(self.seq_len);
        self.complete_into(&mut seq, rng);
        seq
    }

    /// Complete a prefix to length T under the policy. The prefix itself is
    /// kept as-is; if it already ends in pad, the completion is all pad.
    pub fn sample_completion<R: Rng>(&self, prefix: &[u8], rng: &mut R) -> Vec<u8> {
        let mut seq = prefix.to_vec();
        self.complete_into(&mut seq, rng);
        seq
    }

    fn complete_into<R: Rng>(&self, seq: &mut Vec<u8>, rng: &mut R) {
        let pad = self.alphabet.pad_index();
        while seq.len() < self.seq_len {
            if seq.last() == Some(&pad) {
                seq.push(pad);
                continue;
            }
            let probs = self.probabilities(self.context_of(seq));
            seq.push(sample_categorical(&probs, rng));
        }
    }

    /// Mean per-decision negative log-likelihood of a corpus. Decisions run
    /// up to and including the first pad of each sequence.
    pub fn corpus_nll(&self, corpus: &[Vec<u8>]) -> f64 {
        let pad = self.alphabet.pad_index();
        let mut total = 0.0;
        let mut decisions = 0usize;
        for seq in corpus {
            for t in 0..seq.len() {
                if t > 0 && seq[t - 1] == pad {
                    break;
                }
                let probs = self.probabilities(self.context_of(&seq[..t]));
                total -= probs[seq[t] as usize].ln();
                decisions += 1;
            }
        }
        if decisions == 0 {
            0.0
        } else {
            total / decisions as f64
        }
    }

    /// Add `q * ∇ log G(y_t | context)` to `grad`, where the last symbol of
    /// `prefix` is the action y_t. This is the per-position REINFORCE term.
    pub fn accumulate_score_gradient(
        &self,
        prefix: &[u8],
        q: f64,
        grad: &mut HashMap<Vec<u8>, Vec<f64>>,
    ) {
        let (action, state) = prefix.split_last().expect("prefix must contain the action");
        let context = self.context_of(state);
        let probs = self.probabilities(context);
        let entry = grad
            .entry(context.to_vec())
            .or_insert_with(|| vec![0.0; self.alphabet.len()]);
        for (v, p) in probs.iter().enumerate() {
            let indicator = f64::from(v as u8 == *action);
            entry[v] += q * (indicator - p);
        }
    }

    /// Add `scale * delta` into the logit table, materializing contexts on
    /// first touch.
    pub(crate) fn apply_logit_update(
        &mut self,
        delta: &HashMap<Vec<u8>, Vec<f64>>,
        scale: f64,
    ) {
        let width = self.alphabet.len();
        for (ctx, g) in delta {
            let entry = self
                .logits
                .entry(ctx.clone())
                .or_insert_with(|| vec![0.0; width]);
            for (l, d) in entry.iter_mut().zip(g) {
                *l += scale * d;
            }
        }
    }

    /// Force all probability mass onto one symbol for a context (used in
    /// tests and degenerate setups).
    pub fn set_deterministic(&mut self, context: &[u8], symbol: u8) {
        let mut logits = vec![0.0; self.alphabet.len()];
        logits[symbol as usize] = 50.0;
        self.logits.insert(context.to_vec(), logits);
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

fn sample_categorical<R: Rng>(probs: &[f64], rng: &mut R) -> u8 {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i as u8;
        }
    }
    (probs.len() - 1) as u8
}

/// Gradient-ascent MLE on next-symbol log-likelihood. Full-batch per epoch;
/// positions after a sequence's first pad carry no decision and are skipped.
/// `epochs == 0` leaves the policy untouched.
pub fn mle_pretrain(
    policy: &mut Policy,
    corpus: &[Vec<u8>],
    epochs: usize,
    learning_rate: f64,
) -> Result<(), SeqGenError> {
    let width = policy.alphabet.len();
    let pad = policy.alphabet.pad_index();

    // (context -> per-symbol counts), fixed across epochs
    let mut counts: HashMap<Vec<u8>, Vec<f64>> = HashMap::new();
    let mut decisions = 0f64;
    for seq in corpus {
        for &s in seq {
            if s as usize >= width {
                return Err(SeqGenError::InvalidConfig(format!(
                    "corpus symbol index {s} outside alphabet of size {width}"
                )));
            }
        }
        for t in 0..seq.len() {
            if t > 0 && seq[t - 1] == pad {
                break;
            }
            let context = policy.context_of(&seq[..t]).to_vec();
            counts.entry(context).or_insert_with(|| vec![0.0; width])[seq[t] as usize] += 1.0;
            decisions += 1.0;
        }
    }
    if decisions == 0.0 {
        return Ok(());
    }

    // deterministic iteration order for reproducible float accumulation
    let mut contexts: Vec<&Vec<u8>> = counts.keys().collect();
    contexts.sort();
    let contexts: Vec<Vec<u8>> = contexts.into_iter().cloned().collect();

    for _ in 0..epochs {
        for ctx in &contexts {
            let count = &counts[ctx];
            let total: f64 = count.iter().sum();
            let probs = policy.probabilities(ctx);
            let entry = policy
                .logits
                .entry(ctx.clone())
                .or_insert_with(|| vec![0.0; width]);
            for v in 0..width {
                entry[v] += learning_rate * (count[v] - total * probs[v]) / decisions;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_alphabet() -> Alphabet {
        Alphabet::new(vec!['A', 'B', PAD]).unwrap()
    }

    #[test]
    fn alphabet_rules() {
        assert!(Alphabet::new(vec!['A']).is_err());
        assert!(Alphabet::new(vec!['A', 'B']).is_err()); // no pad
        assert!(Alphabet::new(vec!['A', 'A', PAD]).is_err());
        let a = Alphabet::from_corpus(["AB", "BA"]).unwrap();
        assert_eq!(a.symbols(), &['A', 'B', PAD]);
    }

    #[test]
    fn encode_decode() {
        let a = toy_alphabet();
        let seq = a.encode_padded("AB", 4).unwrap();
        assert_eq!(seq, vec![0, 1, 2, 2]);
        assert_eq!(a.decode_trimmed(&seq), "AB");
        assert!(matches!(
            a.encode_padded("AX", 4),
            Err(SeqGenError::SymbolNotInAlphabet { symbol: 'X' })
        ));
        // truncation
        assert_eq!(a.encode_padded("ABAB", 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn sampling_is_deterministic_and_pad_absorbing() {
        let policy = Policy::new(toy_alphabet(), 2, 6);
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let s1 = policy.sample_sequence(&mut r1);
        let s2 = policy.sample_sequence(&mut r2);
        assert_eq!(s1, s2);
        assert_eq!(s1.len(), 6);
        let pad = policy.alphabet().pad_index();
        for mut rng in (0..200).map(ChaCha8Rng::seed_from_u64) {
            let s = policy.sample_sequence(&mut rng);
            if let Some(first_pad) = s.iter().position(|&x| x == pad) {
                assert!(s[first_pad..].iter().all(|&x| x == pad), "{s:?}");
            }
        }
    }

    #[test]
    fn degenerate_policy_emits_one_symbol() {
        let mut policy = Policy::new(toy_alphabet(), 1, 3);
        policy.set_deterministic(&[], 0);
        policy.set_deterministic(&[0], 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(policy.sample_sequence(&mut rng), vec![0, 0, 0]);
    }

    #[test]
    fn probabilities_form_a_simplex() {
        let mut policy = Policy::new(toy_alphabet(), 2, 4);
        policy.logits_mut().insert(vec![0], vec![3.0, -2.0, 0.5]);
        for ctx in [&[][..], &[0][..], &[1, 1][..]] {
            let p = policy.probabilities(ctx);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn mle_zero_epochs_is_identity() {
        let mut policy = Policy::new(toy_alphabet(), 2, 4);
        let corpus = vec![policy.alphabet().encode_padded("AB", 4).unwrap()];
        mle_pretrain(&mut policy, &corpus, 0, 1.0).unwrap();
        assert!(policy.logits().is_empty());
    }

    #[test]
    fn mle_learns_a_repeated_pattern() {
        let mut policy = Policy::new(toy_alphabet(), 2, 3);
        let seq = policy.alphabet().encode_padded("AB", 3).unwrap();
        let corpus = vec![seq; 8];
        mle_pretrain(&mut policy, &corpus, 400, 1.0).unwrap();
        let p = policy.probabilities(&[0]); // context "A"
        assert!(p[1] >= 0.95, "G(B|A) = {}", p[1]);
    }

    #[test]
    fn mle_reduces_nll() {
        let alphabet = toy_alphabet();
        let corpus: Vec<Vec<u8>> = ["AB", "ABA", "AA", "BAB"]
            .iter()
            .map(|s| alphabet.encode_padded(s, 5).unwrap())
            .collect();
        let mut policy = Policy::new(alphabet, 2, 5);
        let before = policy.corpus_nll(&corpus);
        mle_pretrain(&mut policy, &corpus, 1, 1.0).unwrap();
        let after_one = policy.corpus_nll(&corpus);
        mle_pretrain(&mut policy, &corpus, 49, 1.0).unwrap();
        let after_fifty = policy.corpus_nll(&corpus);
        assert!(after_one <= before);
        assert!(after_fifty <= after_one);
    }

    #[test]
    fn mle_rejects_out_of_range_symbols() {
        let mut policy = Policy::new(toy_alphabet(), 2, 3);
        assert!(mle_pretrain(&mut policy, &[vec![7, 0, 2]], 1, 1.0).is_err());
    }
}
