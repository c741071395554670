//! Corpus splicing and synthesis orchestration around inter-pausal units (IPUs).
//!
//! An IPU is a stretch of speech bounded by pauses at least `t_sil` long. The crate covers
//! the training side (cut aligned sentence-level corpora into IPU clips without losing a
//! sample), the synthesis side (predict phrase breaks in unpunctuated text, synthesize each
//! piece, join them with a short gap), and the measurements used to compare sentence- and
//! IPU-level systems.

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod audio;
pub mod audit;
pub mod corpus;
pub mod ipu;
pub mod phrase;
pub mod stats;
pub mod synth;

pub use align::{AlignmentTrack, Segment, TimeUnit};
pub use audio::{AudioClip, F0Summary, F0Track};
pub use audit::{EditOp, EditScript, EouVerdict, ErrorCounts};
pub use corpus::{IpuRecord, Manifest, ManifestKind, Position, Utterance};
pub use ipu::{Boundary, BoundarySet, ExtractConfig, ExtractionReport, SplitPoint};
pub use phrase::BreakLexicon;
pub use stats::{DurationSummary, GammaFit, NgramModel};
pub use synth::{MockBackend, SynthBackend, SynthRequest};

/// Whitespace tokenization: a token is a maximal run of non-whitespace characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}
