use std::collections::{BTreeSet, HashMap};

use super::StatsError;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Add-one smoothed n-gram model (order 1 to 3).
///
/// Each sentence is padded with `order - 1` [`BOS`] markers and one [`EOS`]. Counts of
/// every window of length 1..=order over the padded sentence are kept, so each n-gram's
/// context is itself a counted (n-1)-gram. The prediction vocabulary is the observed
/// tokens plus [`EOS`] and [`UNK`].
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    counts: HashMap<Vec<String>, u64>,
    /// Number of times each (order-1)-token history was followed by a prediction.
    history_totals: HashMap<Vec<String>, u64>,
    vocab: BTreeSet<String>,
}

fn padded(sentence: &[String], order: usize) -> Vec<String> {
    let mut p = Vec::with_capacity(sentence.len() + order);
    p.extend(std::iter::repeat_n(BOS.to_owned(), order - 1));
    p.extend(sentence.iter().cloned());
    p.push(EOS.to_owned());
    p
}

pub fn ngram_train(sentences: &[Vec<String>], order: usize) -> Result<NgramModel, StatsError> {
    if !(1..=3).contains(&order) {
        return Err(StatsError::BadOrder(order));
    }
    if sentences.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
    let mut history_totals: HashMap<Vec<String>, u64> = HashMap::new();
    let mut vocab: BTreeSet<String> = [EOS, UNK].iter().map(|s| s.to_string()).collect();
    for s in sentences {
        vocab.extend(s.iter().cloned());
        let p = padded(s, order);
        for n in 1..=order {
            for w in p.windows(n) {
                *counts.entry(w.to_vec()).or_default() += 1;
            }
        }
        for i in order - 1..p.len() {
            *history_totals.entry(p[i + 1 - order..i].to_vec()).or_default() += 1;
        }
    }
    Ok(NgramModel {
        order,
        counts,
        history_totals,
        vocab,
    })
}

impl NgramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn count<S: AsRef<str>>(&self, ngram: &[S]) -> u64 {
        let key: Vec<String> = ngram.iter().map(|s| s.as_ref().to_owned()).collect();
        self.counts.get(&key).copied().unwrap_or(0)
    }

    fn map_token(&self, t: &str) -> String {
        if t == BOS || self.vocab.contains(t) {
            t.to_owned()
        } else {
            UNK.to_owned()
        }
    }

    /// `P(word | history)` with add-one smoothing; `history` must hold `order - 1` tokens.
    /// Unknown tokens are mapped to [`UNK`].
    pub fn prob<S: AsRef<str>>(&self, history: &[S], word: &str) -> f64 {
        assert_eq!(history.len(), self.order - 1, "history length must be order - 1");
        let mut key: Vec<String> = history.iter().map(|s| self.map_token(s.as_ref())).collect();
        let total = self.history_totals.get(&key).copied().unwrap_or(0);
        key.push(self.map_token(word));
        let c = self.counts.get(&key).copied().unwrap_or(0);
        (c + 1) as f64 / (total + self.vocab.len() as u64) as f64
    }

    /// Histories seen in training.
    pub fn histories(&self) -> impl Iterator<Item = &[String]> {
        self.history_totals.keys().map(Vec::as_slice)
    }
}

/// Natural-log likelihood of `sentence` (including its end marker).
pub fn ngram_loglik<S: AsRef<str>>(model: &NgramModel, sentence: &[S]) -> f64 {
    let toks: Vec<String> = sentence.iter().map(|s| s.as_ref().to_owned()).collect();
    let p = padded(&toks, model.order);
    (model.order - 1..p.len())
        .map(|i| model.prob(&p[i + 1 - model.order..i], &p[i]).ln())
        .sum()
}
