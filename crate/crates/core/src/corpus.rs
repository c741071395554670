//! Corpus records, JSON Lines manifests and train/validation splitting.
//!
//! # Manifest schema
//!
//! One JSON object per line, keys always emitted in this order:
//!
//! | kind       | keys                                                                      |
//! |------------|---------------------------------------------------------------------------|
//! | `sentence` | `kind`, `id`, `tokens`, `audio_path`, `sample_rate`, `duration`           |
//! | `ipu`      | `kind`, `parent_id`, `index`, `position`, `tokens`, `t_start`, `t_end`, `audio_path` |
//!
//! All keys are required. Times are seconds, `sample_rate` is Hz and `position` is one of
//! `first`, `middle`, `last`, `only`. A manifest never mixes kinds. An empty manifest is
//! zero lines and carries no kind, so it reads back as an empty `sentence` manifest unless
//! the caller states the expected kind with [`read_manifest_as`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: manifest mixes {expected} and {found} records")]
    MixedKinds {
        line: usize,
        expected: ManifestKind,
        found: ManifestKind,
    },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("invalid record {id:?}: {message}")]
    Invalid { id: String, message: String },
    #[error("manifest is empty")]
    Empty,
    #[error("train fraction must lie in (0, 1], got {0}")]
    BadFraction(f64),
}

/// One sentence-level corpus item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub tokens: Vec<String>,
    pub audio_path: String,
    pub sample_rate: u32,
    pub duration: f64,
}

impl Utterance {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |message: &str| {
            Err(CorpusError::Invalid {
                id: self.id.clone(),
                message: message.to_owned(),
            })
        };
        if self.id.is_empty() {
            return fail("empty id");
        }
        check_tokens(&self.id, &self.tokens)?;
        if self.sample_rate == 0 {
            return fail("sample_rate must be positive");
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return fail("duration must be finite and non-negative");
        }
        Ok(())
    }
}

/// Where an IPU sits inside its parent utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    First,
    Middle,
    Last,
    Only,
}

impl Position {
    pub fn for_index(index: usize, count: usize) -> Position {
        match (index, count) {
            (_, 1) => Position::Only,
            (0, _) => Position::First,
            (i, n) if i + 1 == n => Position::Last,
            _ => Position::Middle,
        }
    }

    /// First and middle IPUs end at an utterance-internal pause.
    pub fn is_internal_break(self) -> bool {
        matches!(self, Position::First | Position::Middle)
    }
}

/// One extracted inter-pausal unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpuRecord {
    pub parent_id: String,
    pub index: usize,
    pub position: Position,
    pub tokens: Vec<String>,
    pub t_start: f64,
    pub t_end: f64,
    pub audio_path: String,
}

impl IpuRecord {
    /// Record id used in map-file exports: `<parent_id>_<index, 3 digits>`.
    pub fn id(&self) -> String {
        format!("{}_{:03}", self.parent_id, self.index)
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let id = self.id();
        if self.parent_id.is_empty() {
            return Err(CorpusError::Invalid {
                id,
                message: "empty parent_id".into(),
            });
        }
        check_tokens(&id, &self.tokens)?;
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_start >= 0.0) {
            return Err(CorpusError::Invalid {
                id,
                message: "times must be finite and non-negative".into(),
            });
        }
        if self.t_start >= self.t_end {
            return Err(CorpusError::Invalid {
                id,
                message: format!("t_start {} is not before t_end {}", self.t_start, self.t_end),
            });
        }
        Ok(())
    }
}

fn check_tokens(id: &str, tokens: &[String]) -> Result<(), CorpusError> {
    if tokens.is_empty() {
        return Err(CorpusError::Invalid {
            id: id.to_owned(),
            message: "token list is empty".into(),
        });
    }
    if let Some(bad) = tokens
        .iter()
        .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
    {
        return Err(CorpusError::Invalid {
            id: id.to_owned(),
            message: format!("token {bad:?} is empty or contains whitespace"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestKind {
    Sentence,
    Ipu,
}

impl fmt::Display for ManifestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ManifestKind::Sentence => "sentence",
            ManifestKind::Ipu => "ipu",
        })
    }
}

/// An ordered, homogeneous list of corpus records.
#[derive(Debug, Clone, PartialEq)]
pub enum Manifest {
    Sentence(Vec<Utterance>),
    Ipu(Vec<IpuRecord>),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum Line {
    Sentence(Utterance),
    Ipu(IpuRecord),
}

impl Line {
    fn kind(&self) -> ManifestKind {
        match self {
            Line::Sentence(_) => ManifestKind::Sentence,
            Line::Ipu(_) => ManifestKind::Ipu,
        }
    }
}

impl Manifest {
    pub fn empty(kind: ManifestKind) -> Manifest {
        match kind {
            ManifestKind::Sentence => Manifest::Sentence(Vec::new()),
            ManifestKind::Ipu => Manifest::Ipu(Vec::new()),
        }
    }

    pub fn kind(&self) -> ManifestKind {
        match self {
            Manifest::Sentence(_) => ManifestKind::Sentence,
            Manifest::Ipu(_) => ManifestKind::Ipu,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Manifest::Sentence(v) => v.len(),
            Manifest::Ipu(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Record ids in manifest order.
    pub fn ids(&self) -> Vec<String> {
        match self {
            Manifest::Sentence(v) => v.iter().map(|u| u.id.clone()).collect(),
            Manifest::Ipu(v) => v.iter().map(IpuRecord::id).collect(),
        }
    }

    /// `(id, audio_path, tokens)` for every record.
    pub fn entries(&self) -> Vec<(String, &str, &[String])> {
        match self {
            Manifest::Sentence(v) => v
                .iter()
                .map(|u| (u.id.clone(), u.audio_path.as_str(), u.tokens.as_slice()))
                .collect(),
            Manifest::Ipu(v) => v
                .iter()
                .map(|r| (r.id(), r.audio_path.as_str(), r.tokens.as_slice()))
                .collect(),
        }
    }

    /// Checks every record invariant plus id uniqueness. IPU positions must agree with their
    /// indices; gaps in a parent's indices are allowed so train/val subsets stay valid.
    pub fn validate(&self) -> Result<(), CorpusError> {
        match self {
            Manifest::Sentence(utts) => {
                let mut seen = HashSet::new();
                for u in utts {
                    u.validate()?;
                    if !seen.insert(u.id.as_str()) {
                        return Err(CorpusError::DuplicateId(u.id.clone()));
                    }
                }
            }
            Manifest::Ipu(records) => {
                let mut by_parent: BTreeMap<&str, Vec<&IpuRecord>> = BTreeMap::new();
                for r in records {
                    r.validate()?;
                    by_parent.entry(&r.parent_id).or_default().push(r);
                }
                for (_, mut group) in by_parent {
                    group.sort_by_key(|r| r.index);
                    let last = group.len() - 1;
                    for (i, r) in group.iter().enumerate() {
                        if i > 0 && group[i - 1].index == r.index {
                            return Err(CorpusError::DuplicateId(r.id()));
                        }
                        // A split manifest may hold only some of a parent's IPUs, so check
                        // what any subset must satisfy rather than full contiguity.
                        let ok = match r.position {
                            Position::Only => r.index == 0 && last == 0,
                            Position::First => r.index == 0,
                            Position::Middle => r.index > 0,
                            Position::Last => r.index > 0 && i == last,
                        };
                        if !ok {
                            return Err(CorpusError::Invalid {
                                id: r.id(),
                                message: format!("position {:?} inconsistent with index {}", r.position, r.index),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Writes `manifest` as JSON Lines. Returns the number of bytes written.
pub fn write_manifest<W: Write>(manifest: &Manifest, mut dest: W) -> Result<usize, CorpusError> {
    manifest.validate()?;
    let mut written = 0;
    let mut emit = |line: &Line| -> Result<(), CorpusError> {
        let mut buf = serde_json::to_vec(line).map_err(io::Error::other)?;
        buf.push(b'\n');
        dest.write_all(&buf)?;
        written += buf.len();
        Ok(())
    };
    match manifest {
        Manifest::Sentence(utts) => {
            for u in utts {
                emit(&Line::Sentence(u.clone()))?;
            }
        }
        Manifest::Ipu(records) => {
            for r in records {
                emit(&Line::Ipu(r.clone()))?;
            }
        }
    }
    dest.flush()?;
    Ok(written)
}

/// Reads a JSON Lines manifest. Blank lines are skipped; an empty source yields an empty
/// sentence manifest.
pub fn read_manifest<R: BufRead>(src: R) -> Result<Manifest, CorpusError> {
    read_lines(src, None)
}

/// Like [`read_manifest`] but requires every record to be of `kind`.
pub fn read_manifest_as<R: BufRead>(src: R, kind: ManifestKind) -> Result<Manifest, CorpusError> {
    read_lines(src, Some(kind))
}

fn read_lines<R: BufRead>(src: R, expect: Option<ManifestKind>) -> Result<Manifest, CorpusError> {
    let mut manifest: Option<Manifest> = expect.map(Manifest::empty);
    for (i, line) in src.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let m = manifest.get_or_insert_with(|| Manifest::empty(parsed.kind()));
        match (m, parsed) {
            (Manifest::Sentence(v), Line::Sentence(u)) => v.push(u),
            (Manifest::Ipu(v), Line::Ipu(r)) => v.push(r),
            (m, other) => {
                return Err(CorpusError::MixedKinds {
                    line: line_no,
                    expected: m.kind(),
                    found: other.kind(),
                })
            }
        }
    }
    let manifest = manifest.unwrap_or(Manifest::Sentence(Vec::new()));
    manifest.validate()?;
    Ok(manifest)
}

/// Writes the two plain-text map files used by common TTS recipes: `id audio_path` and
/// `id tok1 tok2 ...`, one record per line, in manifest order.
pub fn export_maps<A: Write, T: Write>(
    manifest: &Manifest,
    mut audio_map: A,
    mut text_map: T,
) -> Result<(), CorpusError> {
    manifest.validate()?;
    for (id, audio, tokens) in manifest.entries() {
        writeln!(audio_map, "{id} {audio}")?;
        writeln!(text_map, "{id} {}", tokens.join(" "))?;
    }
    audio_map.flush()?;
    text_map.flush()?;
    Ok(())
}

/// Seeded random train/validation split.
///
/// Record positions are shuffled with ChaCha8 seeded from `seed`; the first
/// `round(train_fraction * N)` become the training set. Both halves keep the original
/// manifest order.
pub fn split_train_val(
    manifest: &Manifest,
    train_fraction: f64,
    seed: u64,
) -> Result<(Manifest, Manifest), CorpusError> {
    if manifest.is_empty() {
        return Err(CorpusError::Empty);
    }
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(CorpusError::BadFraction(train_fraction));
    }
    let n = manifest.len();
    let n_train = ((train_fraction * n as f64).round() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    fn partition<T: Clone>(items: &[T], in_train: &[bool]) -> (Vec<T>, Vec<T>) {
        let mut train = Vec::new();
        let mut val = Vec::new();
        for (item, &t) in items.iter().zip(in_train) {
            if t {
                train.push(item.clone());
            } else {
                val.push(item.clone());
            }
        }
        (train, val)
    }
    Ok(match manifest {
        Manifest::Sentence(v) => {
            let (t, v) = partition(v, &in_train);
            (Manifest::Sentence(t), Manifest::Sentence(v))
        }
        Manifest::Ipu(v) => {
            let (t, v) = partition(v, &in_train);
            (Manifest::Ipu(t), Manifest::Ipu(v))
        }
    })
}
