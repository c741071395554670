//! Automatic counting of repeated and skipped words in synthesized speech, and
//! end-of-utterance (stop token) trace auditing.
//!
//! A reference transcript is aligned against a hypothesis transcript of the synthesized
//! audio (produced by any external recognizer). An inserted hypothesis word equal to the
//! word right before it counts as a repetition; every deleted reference word is a skip.

use std::ops::AddAssign;

use serde::Serialize;

use crate::stats::round2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("edit script does not fit the token sequences: {0}")]
    ScriptMismatch(String),
    #[error("no utterances")]
    NoUtterances,
    #[error("empty stop-probability trace")]
    EmptyTrace,
    #[error("threshold must lie in (0, 1), got {0}")]
    BadThreshold(f64),
}

/// One step of an alignment; `r` indexes reference tokens and `h` hypothesis tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    Match { r: usize, h: usize },
    Substitute { r: usize, h: usize },
    Insert { h: usize },
    Delete { r: usize },
}

impl EditOp {
    fn cost(self) -> usize {
        match self {
            EditOp::Match { .. } => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    pub fn cost(&self) -> usize {
        self.ops.iter().map(|op| op.cost()).sum()
    }
}

/// Minimum-cost alignment with unit costs.
///
/// Distances are computed over suffixes and the script is read front to back, preferring
/// match, then substitution, deletion and insertion among equally cheap steps. Reading
/// forward places extra hypothesis words after the copy they duplicate.
pub fn align_tokens<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> EditScript {
    let (n, m) = (reference.len(), hypothesis.len());
    let w = m + 1;
    // dist[i * w + j] = distance(reference[i..], hypothesis[j..])
    let mut dist = vec![0usize; (n + 1) * w];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            dist[i * w + j] = if i == n {
                m - j
            } else if j == m {
                n - i
            } else {
                let same = reference[i].as_ref() == hypothesis[j].as_ref();
                let diag = dist[(i + 1) * w + j + 1] + usize::from(!same);
                diag.min(dist[(i + 1) * w + j] + 1).min(dist[i * w + j + 1] + 1)
            };
        }
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let here = dist[i * w + j];
        if i < n && j < m {
            let same = reference[i].as_ref() == hypothesis[j].as_ref();
            if same && dist[(i + 1) * w + j + 1] == here {
                ops.push(EditOp::Match { r: i, h: j });
                i += 1;
                j += 1;
                continue;
            }
            if !same && dist[(i + 1) * w + j + 1] + 1 == here {
                ops.push(EditOp::Substitute { r: i, h: j });
                i += 1;
                j += 1;
                continue;
            }
        }
        if i < n && dist[(i + 1) * w + j] + 1 == here {
            ops.push(EditOp::Delete { r: i });
            i += 1;
        } else {
            ops.push(EditOp::Insert { h: j });
            j += 1;
        }
    }
    EditScript { ops }
}

/// Error totals for a set of utterances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ErrorCounts {
    pub repetitions: u64,
    pub skips: u64,
    pub other_insertions: u64,
    pub substitutions: u64,
    pub n_utterances: u64,
}

impl AddAssign for ErrorCounts {
    fn add_assign(&mut self, o: Self) {
        self.repetitions += o.repetitions;
        self.skips += o.skips;
        self.other_insertions += o.other_insertions;
        self.substitutions += o.substitutions;
        self.n_utterances += o.n_utterances;
    }
}

impl std::iter::Sum for ErrorCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ErrorCounts::default(), |mut a, b| {
            a += b;
            a
        })
    }
}

/// Classifies the edits of one utterance's script. Fails if `script` was not produced
/// from this `(reference, hypothesis)` pair.
pub fn count_errors<S: AsRef<str>>(
    script: &EditScript,
    reference: &[S],
    hypothesis: &[S],
) -> Result<ErrorCounts, AuditError> {
    let mut counts = ErrorCounts {
        n_utterances: 1,
        ..ErrorCounts::default()
    };
    let (mut next_r, mut next_h) = (0, 0);
    let mismatch = |m: String| Err(AuditError::ScriptMismatch(m));
    for &op in &script.ops {
        let (r, h) = match op {
            EditOp::Match { r, h } | EditOp::Substitute { r, h } => (Some(r), Some(h)),
            EditOp::Insert { h } => (None, Some(h)),
            EditOp::Delete { r } => (Some(r), None),
        };
        if r.is_some_and(|r| r != next_r || r >= reference.len()) {
            return mismatch(format!("{op:?}: expected reference index {next_r}"));
        }
        if h.is_some_and(|h| h != next_h || h >= hypothesis.len()) {
            return mismatch(format!("{op:?}: expected hypothesis index {next_h}"));
        }
        match op {
            EditOp::Match { r, h } if reference[r].as_ref() != hypothesis[h].as_ref() => {
                return mismatch(format!("{op:?} pairs different tokens"));
            }
            EditOp::Substitute { r, h } if reference[r].as_ref() == hypothesis[h].as_ref() => {
                return mismatch(format!("{op:?} pairs identical tokens"));
            }
            EditOp::Match { .. } => {}
            EditOp::Substitute { .. } => counts.substitutions += 1,
            EditOp::Delete { .. } => counts.skips += 1,
            EditOp::Insert { h } => {
                if h > 0 && hypothesis[h].as_ref() == hypothesis[h - 1].as_ref() {
                    counts.repetitions += 1;
                } else {
                    counts.other_insertions += 1;
                }
            }
        }
        next_r += usize::from(r.is_some());
        next_h += usize::from(h.is_some());
    }
    if next_r != reference.len() || next_h != hypothesis.len() {
        return mismatch(format!(
            "script covers {next_r}/{} reference and {next_h}/{} hypothesis tokens",
            reference.len(),
            hypothesis.len()
        ));
    }
    Ok(counts)
}

/// Aligns and counts in one step.
pub fn audit_transcript<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> ErrorCounts {
    let script = align_tokens(reference, hypothesis);
    count_errors(&script, reference, hypothesis).expect("script built from these sequences")
}

/// Error rates in percent of utterances, two decimals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRates {
    pub repetitions: f64,
    pub skips: f64,
    pub other_insertions: f64,
    pub substitutions: f64,
    /// Repetitions plus skips: both stem from a mistimed end-of-utterance decision.
    pub incorrect_eou: f64,
}

pub fn error_rates(counts: &ErrorCounts) -> Result<ErrorRates, AuditError> {
    if counts.n_utterances == 0 {
        return Err(AuditError::NoUtterances);
    }
    let pct = |c: u64| round2(100.0 * c as f64 / counts.n_utterances as f64);
    Ok(ErrorRates {
        repetitions: pct(counts.repetitions),
        skips: pct(counts.skips),
        other_insertions: pct(counts.other_insertions),
        substitutions: pct(counts.substitutions),
        incorrect_eou: pct(counts.repetitions + counts.skips),
    })
}

/// Error counts laid out as rows per error type and one column per subset plus a total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorTable {
    pub system: String,
    pub columns: Vec<String>,
    pub rows: Vec<ErrorRow>,
    pub total: ErrorCounts,
    pub rates: ErrorRates,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub error_type: &'static str,
    pub values: Vec<u64>,
}

pub fn error_table(system: &str, groups: &[(String, ErrorCounts)]) -> Result<ErrorTable, AuditError> {
    let total: ErrorCounts = groups.iter().map(|(_, c)| *c).sum();
    let rates = error_rates(&total)?;
    let mut columns: Vec<String> = groups.iter().map(|(n, _)| n.clone()).collect();
    columns.push("Total".into());
    let row = |error_type, f: fn(&ErrorCounts) -> u64| ErrorRow {
        error_type,
        values: groups.iter().map(|(_, c)| f(c)).chain([f(&total)]).collect(),
    };
    Ok(ErrorTable {
        system: system.to_owned(),
        columns,
        rows: vec![
            row("Repetitions", |c| c.repetitions),
            row("Skips", |c| c.skips),
            row("Other insertions", |c| c.other_insertions),
            row("Substitutions", |c| c.substitutions),
            row("Utterances", |c| c.n_utterances),
        ],
        total,
        rates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "frames", rename_all = "snake_case")]
pub enum EouStatus {
    OnTime,
    Early(usize),
    Late(usize),
    NoEou,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EouVerdict {
    pub status: EouStatus,
    pub crossing_frame: Option<usize>,
}

/// Finds the first frame whose stop probability reaches `threshold` and compares it with
/// the expected end frame.
pub fn eou_audit(
    stop_probs: &[f64],
    expected_frame: usize,
    threshold: f64,
    tolerance: usize,
) -> Result<EouVerdict, AuditError> {
    if stop_probs.is_empty() {
        return Err(AuditError::EmptyTrace);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(AuditError::BadThreshold(threshold));
    }
    let crossing = stop_probs.iter().position(|&p| p >= threshold);
    let status = match crossing {
        None => EouStatus::NoEou,
        Some(c) if c.abs_diff(expected_frame) <= tolerance => EouStatus::OnTime,
        Some(c) if c < expected_frame => EouStatus::Early(expected_frame - c),
        Some(c) => EouStatus::Late(c - expected_frame),
    };
    Ok(EouVerdict {
        status,
        crossing_frame: crossing,
    })
}

/// Parses a stop-probability trace given as a JSON array or one number per line.
pub fn parse_trace(text: &str) -> Result<Vec<f64>, String> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| e.to_string());
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| format!("line {}: not a number: {l:?}", i + 1))
        })
        .collect()
}
