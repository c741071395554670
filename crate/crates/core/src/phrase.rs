//! Phrase-break prediction for unpunctuated text.
//!
//! Words that most often close an utterance-internal IPU in the training data form a break
//! lexicon. At synthesis time text is cut after punctuation and after lexicon words, then
//! short pieces are merged so no unit is too short to synthesize well.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Manifest;

/// Marks that close a phrase: `, ; : . ? !` and the Devanagari danda.
pub const BREAK_PUNCTUATION: [char; 7] = [',', ';', ':', '.', '?', '!', '।'];

/// Default number of active lexicon entries.
pub const DEFAULT_LEXICON_K: usize = 20;

/// Default minimum words per synthesis unit.
pub const DEFAULT_MIN_WORDS: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhraseError {
    #[error("manifest is empty")]
    EmptyManifest,
    #[error("break lexicon needs an IPU manifest")]
    WrongKind,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("lexicon entry {0:?} has a zero count")]
    ZeroCount(String),
    #[error("lexicon lists {0:?} twice")]
    DuplicateWord(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub word: String,
    pub count: u64,
}

/// Ranked IPU-final words. Ordered by count descending, then word ascending; the first
/// `k` entries are active.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BreakLexicon {
    entries: Vec<LexiconEntry>,
    k: usize,
}

impl BreakLexicon {
    pub fn empty() -> Self {
        BreakLexicon::default()
    }

    /// Builds a lexicon from arbitrary-order entries. `k` is clamped to the entry count.
    pub fn from_entries(mut entries: Vec<LexiconEntry>, k: usize) -> Result<Self, PhraseError> {
        if let Some(e) = entries.iter().find(|e| e.count == 0) {
            return Err(PhraseError::ZeroCount(e.word.clone()));
        }
        entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
        if let Some(w) = entries.windows(2).find(|w| w[0].word == w[1].word) {
            return Err(PhraseError::DuplicateWord(w[0].word.clone()));
        }
        let k = k.min(entries.len());
        Ok(BreakLexicon { entries, k })
    }

    pub fn from_json(json: &str, k: usize) -> Result<Self, serde_json::Error> {
        let entries: Vec<LexiconEntry> = serde_json::from_str(json)?;
        Self::from_entries(entries, k).map_err(serde::de::Error::custom)
    }

    /// JSON array of `{word, count}` in rank order (all entries, not just the active ones).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("entries serialize")
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn active(&self) -> &[LexiconEntry] {
        &self.entries[..self.k]
    }

    pub fn is_break(&self, word: &str) -> bool {
        self.active().iter().any(|e| e.word == word)
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k.min(self.entries.len());
        self
    }
}

/// Counts the last token of every IPU that ends at an utterance-internal pause (positions
/// `first` and `middle`); with `include_terminal`, utterance-final IPUs count too.
pub fn build_break_lexicon(
    ipus: &Manifest,
    k: usize,
    include_terminal: bool,
) -> Result<BreakLexicon, PhraseError> {
    let Manifest::Ipu(records) = ipus else {
        return Err(PhraseError::WrongKind);
    };
    if records.is_empty() {
        return Err(PhraseError::EmptyManifest);
    }
    if k == 0 {
        return Err(PhraseError::ZeroK);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for r in records {
        if !(include_terminal || r.position.is_internal_break()) {
            continue;
        }
        if let Some(last) = r.tokens.last() {
            *counts.entry(last).or_default() += 1;
        }
    }
    let entries = counts
        .into_iter()
        .map(|(word, count)| LexiconEntry {
            word: word.to_owned(),
            count,
        })
        .collect();
    BreakLexicon::from_entries(entries, k)
}

/// Given group sizes, decides which group ends remain cuts after merging short groups.
///
/// Left to right, a group with fewer than `min` items absorbs the next one until it is
/// long enough. A short final group merges into its predecessor. Returns indices `i` such
/// that a cut stays after group `i`.
pub(crate) fn merge_short_groups(sizes: &[usize], min: usize) -> Vec<usize> {
    let mut kept = Vec::new();
    let mut acc = 0;
    for (i, &s) in sizes.iter().enumerate() {
        acc += s;
        if acc >= min && i + 1 < sizes.len() {
            kept.push(i);
            acc = 0;
        }
    }
    if acc < min {
        kept.pop();
    }
    kept
}

fn strip_break_punctuation(token: &str) -> (&str, bool) {
    let stripped = token.trim_end_matches(BREAK_PUNCTUATION);
    (stripped, stripped.len() != token.len())
}

/// Splits a token sequence into synthesis units.
///
/// 1. With `honor_punctuation`, cut after any token ending in [`BREAK_PUNCTUATION`] and
///    strip those marks (a token that was only punctuation disappears).
/// 2. Cut after every active lexicon word.
/// 3. Merge units shorter than `min_words` forward, the last one backward.
///
/// The concatenated output equals the input minus stripped punctuation.
pub fn segment_text<S: AsRef<str>>(
    tokens: &[S],
    lexicon: &BreakLexicon,
    min_words: usize,
    honor_punctuation: bool,
) -> Vec<Vec<String>> {
    let mut pieces: Vec<Vec<String>> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for tok in tokens {
        let tok = tok.as_ref();
        let (word, punct) = if honor_punctuation {
            strip_break_punctuation(tok)
        } else {
            (tok, false)
        };
        if !word.is_empty() {
            current.push(word.to_owned());
        }
        if (punct || lexicon.is_break(word)) && !current.is_empty() {
            pieces.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        pieces.push(current);
    }

    let sizes: Vec<usize> = pieces.iter().map(Vec::len).collect();
    let kept = merge_short_groups(&sizes, min_words.max(1));
    let mut out = Vec::with_capacity(kept.len() + 1);
    let mut merged = Vec::new();
    for (i, piece) in pieces.into_iter().enumerate() {
        merged.extend(piece);
        if kept.binary_search(&i).is_ok() {
            out.push(std::mem::take(&mut merged));
        }
    }
    if !merged.is_empty() {
        out.push(merged);
    }
    out
}
