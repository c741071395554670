//! Splitting aligned sentence-level utterances into inter-pausal units.
//!
//! Pause material between two words (pause-labelled segments plus any unlabelled gap
//! between segments) forms one pause region. Regions shorter than `min_sp` are treated as
//! speech-internal; the remaining ones lasting at least `t_sil` become IPU boundaries.
//! Leading and trailing silence never does. Durations are compared with a 1 ns slack so
//! that a pause of exactly `t_sil` written in decimal still counts.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::align::{validate_alignment, AlignError, AlignmentTrack, Segment};
use crate::audio::{time_to_index, AudioClip};
use crate::corpus::{IpuRecord, Manifest, Position, Utterance};
use crate::phrase::merge_short_groups;
use crate::stats::{duration_summary, DurationSummary};

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Alignment(#[from] AlignError),
    #[error("audio does not match utterance: {0}")]
    AudioMismatch(String),
    #[error("utterance {0:?} has no tokens")]
    EmptyUtterance(String),
    #[error("IPU {index} of {id:?} would be empty")]
    DegenerateIpu { id: String, index: usize },
    #[error("manifest must be sentence-level")]
    WrongKind,
    #[error(
        "mixed sample rates ({0} Hz and {1} Hz); resample the corpus to one rate \
         (22.05 kHz is the usual TTS convention) before extraction"
    )]
    MixedRates(u32, u32),
}

/// Where inside a boundary pause the audio is cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitPoint {
    /// Cut at the pause midpoint; IPUs tile the utterance without losing samples.
    SilenceMidpoint,
    /// Keep at most `pad` seconds of silence either side of each IPU's speech.
    TrimToPad { pad: f64 },
}

impl fmt::Display for SplitPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitPoint::SilenceMidpoint => f.write_str("midpoint"),
            SplitPoint::TrimToPad { pad } => write!(f, "trim:{pad}"),
        }
    }
}

impl FromStr for SplitPoint {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "midpoint" {
            return Ok(SplitPoint::SilenceMidpoint);
        }
        let pad = s
            .strip_prefix("trim:")
            .ok_or_else(|| format!("split point must be `midpoint` or `trim:PAD`, got {s:?}"))?;
        let pad: f64 = pad.parse().map_err(|_| format!("bad pad {pad:?}"))?;
        if !(pad >= 0.0 && pad.is_finite()) {
            return Err(format!("pad must be >= 0, got {pad}"));
        }
        Ok(SplitPoint::TrimToPad { pad })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractConfig {
    /// Minimum pause duration (s) that splits an utterance.
    pub t_sil: f64,
    /// Pauses shorter than this (s) are speech-internal and never split.
    pub min_sp: f64,
    pub split_point: SplitPoint,
    /// Merge IPUs with fewer words into their successor (the last one into its predecessor).
    pub min_ipu_words: Option<usize>,
    /// Allowed disagreement (s) between alignment end, audio length and declared duration.
    pub tolerance: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            t_sil: 0.100,
            min_sp: 0.020,
            split_point: SplitPoint::SilenceMidpoint,
            min_ipu_words: None,
            tolerance: 0.020,
        }
    }
}

impl ExtractConfig {
    pub fn with_t_sil(mut self, t_sil: f64) -> Self {
        self.t_sil = t_sil;
        self
    }

    pub fn validate(&self) -> Result<(), ExtractError> {
        let bad = |m: String| Err(ExtractError::Config(m));
        if !(self.t_sil > 0.0 && self.t_sil.is_finite()) {
            return bad(format!("t_sil must be positive, got {}", self.t_sil));
        }
        if !(self.min_sp > 0.0 && self.min_sp.is_finite()) {
            return bad(format!("min_sp must be positive, got {}", self.min_sp));
        }
        if let SplitPoint::TrimToPad { pad } = self.split_point {
            if !(pad >= 0.0 && pad.is_finite()) {
                return bad(format!("pad must be >= 0, got {pad}"));
            }
        }
        if self.min_ipu_words == Some(0) {
            return bad("min_ipu_words must be at least 1".into());
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return bad(format!("tolerance must be >= 0, got {}", self.tolerance));
        }
        Ok(())
    }
}

/// A run of pause material between two words.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pause {
    pub t_start: f64,
    pub t_end: f64,
    /// Number of words before the pause.
    pub words_before: usize,
}

impl Pause {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

pub type Boundary = Pause;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BoundarySet {
    pub boundaries: Vec<Boundary>,
}

impl BoundarySet {
    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }
}

/// Utterance-internal pause regions of `track`, in time order.
pub fn interior_pauses(track: &AlignmentTrack) -> Vec<Pause> {
    let mut pauses = Vec::new();
    let mut pending: Option<(f64, f64)> = None;
    let mut prev_end: Option<f64> = None;
    let mut words = 0;
    let extend = |pending: &mut Option<(f64, f64)>, a: f64, b: f64| {
        *pending = Some(match *pending {
            Some((s, e)) => (s.min(a), e.max(b)),
            None => (a, b),
        });
    };
    for seg in &track.segments {
        if let Some(p) = prev_end {
            if seg.t_start > p {
                extend(&mut pending, p, seg.t_start);
            }
        }
        if track.is_pause(seg) {
            extend(&mut pending, seg.t_start, seg.t_end);
        } else {
            if let Some((s, e)) = pending.take() {
                if words > 0 {
                    pauses.push(Pause {
                        t_start: s,
                        t_end: e,
                        words_before: words,
                    });
                }
            }
            words += 1;
        }
        prev_end = Some(seg.t_end);
    }
    pauses
}

fn survives_elimination(p: &Pause, cfg: &ExtractConfig) -> bool {
    p.duration() + TIME_EPS >= cfg.min_sp
}

fn is_boundary(p: &Pause, cfg: &ExtractConfig) -> bool {
    survives_elimination(p, cfg) && p.duration() + TIME_EPS >= cfg.t_sil
}

/// Interior pauses at least `t_sil` long that survive the `min_sp` elimination.
pub fn find_ipu_boundaries(track: &AlignmentTrack, cfg: &ExtractConfig) -> BoundarySet {
    BoundarySet {
        boundaries: interior_pauses(track)
            .into_iter()
            .filter(|p| is_boundary(p, cfg))
            .collect(),
    }
}

/// Applies the `min_ipu_words` merge to a boundary set for an utterance of `n_words`.
fn merge_boundaries(set: BoundarySet, n_words: usize, min_words: usize) -> BoundarySet {
    let mut sizes = Vec::with_capacity(set.len() + 1);
    let mut prev = 0;
    for b in &set.boundaries {
        sizes.push(b.words_before - prev);
        prev = b.words_before;
    }
    sizes.push(n_words - prev);
    let kept = merge_short_groups(&sizes, min_words);
    BoundarySet {
        boundaries: kept.into_iter().map(|i| set.boundaries[i]).collect(),
    }
}

/// Splits one utterance into IPU records and their audio.
///
/// With [`SplitPoint::SilenceMidpoint`] the first IPU starts at sample 0, the last ends at
/// the final sample, and neighbours share their cut sample, so joining the clips with no
/// gap gives back `clip` exactly. Each record's `audio_path` is `<parent>_<index>.wav`;
/// callers that store the clips elsewhere overwrite it.
pub fn extract_ipus(
    utt: &Utterance,
    clip: &AudioClip,
    track: &AlignmentTrack,
    cfg: &ExtractConfig,
) -> Result<Vec<(IpuRecord, AudioClip)>, ExtractError> {
    cfg.validate()?;
    if utt.tokens.is_empty() {
        return Err(ExtractError::EmptyUtterance(utt.id.clone()));
    }
    validate_alignment(track, utt, cfg.tolerance)?;
    if clip.sample_rate != utt.sample_rate {
        return Err(ExtractError::AudioMismatch(format!(
            "{}: audio is {} Hz, manifest says {} Hz",
            utt.id, clip.sample_rate, utt.sample_rate
        )));
    }
    let clip_dur = clip.duration();
    if (clip_dur - utt.duration).abs() > cfg.tolerance || track.end_time() > clip_dur + cfg.tolerance {
        return Err(ExtractError::AudioMismatch(format!(
            "{}: audio lasts {clip_dur:.3}s, manifest {:.3}s, alignment {:.3}s",
            utt.id,
            utt.duration,
            track.end_time()
        )));
    }

    let n_words = utt.tokens.len();
    let mut bounds = find_ipu_boundaries(track, cfg);
    if let Some(min) = cfg.min_ipu_words {
        bounds = merge_boundaries(bounds, n_words, min);
    }
    let words: Vec<&Segment> = track.words().collect();
    let sr = clip.sample_rate;
    let mids: Vec<f64> = bounds
        .boundaries
        .iter()
        .map(|b| 0.5 * (b.t_start + b.t_end))
        .collect();

    let n_ipus = bounds.len() + 1;
    let mut out = Vec::with_capacity(n_ipus);
    for index in 0..n_ipus {
        let first_word = if index == 0 { 0 } else { bounds.boundaries[index - 1].words_before };
        let end_word = bounds.boundaries.get(index).map_or(n_words, |b| b.words_before);
        let (start_idx, end_idx) = match cfg.split_point {
            SplitPoint::SilenceMidpoint => (
                if index == 0 { 0 } else { time_to_index(mids[index - 1], sr) },
                mids.get(index).map_or(clip.len(), |&m| time_to_index(m, sr)),
            ),
            SplitPoint::TrimToPad { pad } => {
                let lo = if index == 0 { 0.0 } else { mids[index - 1] };
                let hi = mids.get(index).copied().unwrap_or(clip_dur);
                let t0 = (words[first_word].t_start - pad).max(lo);
                let t1 = (words[end_word - 1].t_end + pad).min(hi);
                (time_to_index(t0, sr), time_to_index(t1, sr))
            }
        };
        let end_idx = end_idx.min(clip.len());
        if start_idx >= end_idx {
            return Err(ExtractError::DegenerateIpu {
                id: utt.id.clone(),
                index,
            });
        }
        let mut record = IpuRecord {
            parent_id: utt.id.clone(),
            index,
            position: Position::for_index(index, n_ipus),
            tokens: utt.tokens[first_word..end_word].to_vec(),
            t_start: start_idx as f64 / sr as f64,
            t_end: end_idx as f64 / sr as f64,
            audio_path: String::new(),
        };
        record.audio_path = format!("{}.wav", record.id());
        out.push((record, clip.slice_indices(start_idx, end_idx)));
    }
    Ok(out)
}

/// Counts per fixed bin. `counts[i]` covers `[edges[i], edges[i+1])`; values at or past the
/// last edge land in `overflow`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub overflow: usize,
}

/// Bin edges (s) for pause and boundary durations.
pub const PAUSE_BIN_EDGES: [f64; 11] = [0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0, 2.0];

impl Histogram {
    pub fn new(edges: Vec<f64>) -> Self {
        let n = edges.len().saturating_sub(1);
        Histogram {
            edges,
            counts: vec![0; n],
            overflow: 0,
        }
    }

    /// Pause histogram with [`PAUSE_BIN_EDGES`].
    pub fn pauses() -> Self {
        Histogram::new(PAUSE_BIN_EDGES.to_vec())
    }

    /// Utterance-length histogram: 1 s bins from 0 to 30 s.
    pub fn durations() -> Self {
        Histogram::new((0..=30).map(f64::from).collect())
    }

    pub fn add(&mut self, v: f64) {
        match self.edges.windows(2).position(|w| v >= w[0] && v < w[1]) {
            Some(i) => self.counts[i] += 1,
            None if self.edges.last().is_some_and(|&l| v >= l) => self.overflow += 1,
            // Below the first edge; durations are never negative so fold into bin 0.
            None => {
                if let Some(c) = self.counts.first_mut() {
                    *c += 1
                }
            }
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.overflow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtteranceBoundaries {
    pub id: String,
    pub n_ipus: usize,
    pub boundaries: Vec<[f64; 2]>,
}

/// Corpus-level extraction summary; serialized as the extraction report JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionReport {
    pub config: ExtractConfig,
    pub n_utterances: usize,
    pub n_processed: usize,
    pub n_ipus: usize,
    pub n_boundaries: usize,
    /// Interior pauses dropped for being shorter than `min_sp`.
    pub n_eliminated_pauses: usize,
    pub missing_alignments: Vec<String>,
    pub failures: Vec<Failure>,
    pub pause_histogram: Histogram,
    pub boundary_histogram: Histogram,
    pub sentence_durations: Option<DurationSummary>,
    pub ipu_durations: Option<DurationSummary>,
    pub sentence_duration_histogram: Histogram,
    pub ipu_duration_histogram: Histogram,
    pub utterances: Vec<UtteranceBoundaries>,
}

impl ExtractionReport {
    pub fn is_complete(&self) -> bool {
        self.missing_alignments.is_empty() && self.failures.is_empty()
    }
}

/// Extracts IPUs from every utterance of a sentence manifest.
///
/// `load` fetches an utterance's audio; `store` persists one IPU clip and returns the path
/// recorded in the output manifest. Utterances are processed on the current rayon pool.
/// Missing alignments and per-utterance failures are listed in the report and skipped.
pub fn extract_corpus<L, S>(
    manifest: &Manifest,
    aligns: &HashMap<String, AlignmentTrack>,
    cfg: &ExtractConfig,
    load: L,
    store: S,
) -> Result<(Manifest, ExtractionReport), ExtractError>
where
    L: Fn(&Utterance) -> Result<AudioClip, String> + Sync,
    S: Fn(&IpuRecord, &AudioClip) -> Result<String, String> + Sync,
{
    cfg.validate()?;
    let Manifest::Sentence(utts) = manifest else {
        return Err(ExtractError::WrongKind);
    };
    if let Some(first) = utts.first() {
        if let Some(u) = utts.iter().find(|u| u.sample_rate != first.sample_rate) {
            return Err(ExtractError::MixedRates(first.sample_rate, u.sample_rate));
        }
    }

    enum Outcome {
        Missing,
        Failed(String),
        Done {
            clip_duration: f64,
            pauses: Vec<Pause>,
            records: Vec<IpuRecord>,
        },
    }

    let outcomes: Vec<Outcome> = utts
        .par_iter()
        .map(|utt| {
            let Some(track) = aligns.get(&utt.id) else {
                return Outcome::Missing;
            };
            let run = || -> Result<Outcome, String> {
                let clip = load(utt)?;
                let pieces = extract_ipus(utt, &clip, track, cfg).map_err(|e| e.to_string())?;
                let mut records = Vec::with_capacity(pieces.len());
                for (mut rec, audio) in pieces {
                    rec.audio_path = store(&rec, &audio)?;
                    records.push(rec);
                }
                Ok(Outcome::Done {
                    clip_duration: clip.duration(),
                    pauses: interior_pauses(track),
                    records,
                })
            };
            run().unwrap_or_else(Outcome::Failed)
        })
        .collect();

    let mut report = ExtractionReport {
        config: cfg.clone(),
        n_utterances: utts.len(),
        n_processed: 0,
        n_ipus: 0,
        n_boundaries: 0,
        n_eliminated_pauses: 0,
        missing_alignments: Vec::new(),
        failures: Vec::new(),
        pause_histogram: Histogram::pauses(),
        boundary_histogram: Histogram::pauses(),
        sentence_durations: None,
        ipu_durations: None,
        sentence_duration_histogram: Histogram::durations(),
        ipu_duration_histogram: Histogram::durations(),
        utterances: Vec::new(),
    };
    let mut records = Vec::new();
    let mut sentence_durs = Vec::new();
    let mut ipu_durs = Vec::new();
    for (utt, outcome) in utts.iter().zip(outcomes) {
        match outcome {
            Outcome::Missing => report.missing_alignments.push(utt.id.clone()),
            Outcome::Failed(reason) => report.failures.push(Failure {
                id: utt.id.clone(),
                reason,
            }),
            Outcome::Done {
                clip_duration,
                pauses,
                records: recs,
            } => {
                report.n_processed += 1;
                sentence_durs.push(clip_duration);
                report.sentence_duration_histogram.add(clip_duration);
                for p in &pauses {
                    if survives_elimination(p, cfg) {
                        report.pause_histogram.add(p.duration());
                    } else {
                        report.n_eliminated_pauses += 1;
                    }
                }
                // Boundaries actually used (after any min-word merge) are the pauses
                // straddling each cut.
                let cuts: Vec<usize> = recs
                    .iter()
                    .skip(1)
                    .map(|r| r.index)
                    .map(|i| recs[..i].iter().map(|r| r.tokens.len()).sum())
                    .collect();
                let used: Vec<&Pause> = pauses
                    .iter()
                    .filter(|p| cuts.contains(&p.words_before))
                    .collect();
                for p in &used {
                    report.boundary_histogram.add(p.duration());
                }
                report.n_boundaries += used.len();
                report.utterances.push(UtteranceBoundaries {
                    id: utt.id.clone(),
                    n_ipus: recs.len(),
                    boundaries: used.iter().map(|p| [p.t_start, p.t_end]).collect(),
                });
                for r in &recs {
                    ipu_durs.push(r.duration());
                    report.ipu_duration_histogram.add(r.duration());
                }
                report.n_ipus += recs.len();
                records.extend(recs);
            }
        }
    }
    report.sentence_durations = duration_summary(&sentence_durs).ok();
    report.ipu_durations = duration_summary(&ipu_durs).ok();
    Ok((Manifest::Ipu(records), report))
}
