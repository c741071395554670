//! Synthesis backends and the long-text orchestrator: split text into IPU-sized units,
//! synthesize each one, and join the audio in order with a short gap.
//!
//! # HTTP protocol
//!
//! `POST {endpoint}/synthesize` with `Content-Type: application/json` and body
//! `{"text": "...", "voice": "..." | null, "sample_rate": 22050 | null}`. A 2xx response
//! carries a PCM-16 mono WAV body (`audio/wav`); any other status is an error.

use std::io::Read;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Serialize;

use crate::audio::{concat_with_gaps, read_wav, time_to_index, AudioClip, AudioError};
use crate::phrase::{segment_text, BreakLexicon};

/// Default silence inserted between synthesized units, seconds.
pub const DEFAULT_GAP: f64 = 0.100;
/// Default bound on in-flight synthesis calls.
pub const DEFAULT_CONCURRENCY: usize = 4;
/// Response bodies larger than this are rejected.
const MAX_RESPONSE_BYTES: u64 = 1 << 30;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("synthesis text is empty")]
    EmptyText,
    #[error("text has {len} characters; backend accepts at most {max}")]
    TextTooLong { len: usize, max: usize },
    #[error("request timed out")]
    Timeout,
    #[error("backend unavailable: HTTP {0}")]
    Status(u16),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("bad audio payload: {0}")]
    Payload(#[from] AudioError),
    #[error("backend returned {got} Hz audio but advertises {expected} Hz")]
    RateMismatch { expected: u32, got: u32 },
    #[error("segment {number} of {total} ({text:?}) failed: {source}")]
    Segment {
        /// 1-based.
        number: usize,
        total: usize,
        text: String,
        #[source]
        source: Box<SynthError>,
    },
    #[error("nothing to synthesize after segmentation")]
    NoSegments,
    #[error("{0}")]
    Backend(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthRequest {
    pub text: String,
    pub voice: Option<String>,
    #[serde(rename = "sample_rate")]
    pub sample_rate_hint: Option<u32>,
}

impl SynthRequest {
    pub fn new(text: impl Into<String>) -> Result<Self, SynthError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(SynthError::EmptyText);
        }
        Ok(SynthRequest {
            text,
            voice: None,
            sample_rate_hint: None,
        })
    }

    pub fn with_voice(mut self, voice: Option<String>) -> Self {
        self.voice = voice;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Capabilities {
    pub sample_rate: u32,
    pub max_text_len: Option<usize>,
    /// Maximum simultaneous `synthesize` calls the backend tolerates.
    pub max_concurrency: usize,
}

/// A text-to-speech engine. Returned clips must use the advertised sample rate.
pub trait SynthBackend: Sync {
    fn synthesize(&self, req: &SynthRequest) -> Result<AudioClip, SynthError>;
    fn capabilities(&self) -> Capabilities;
}

/// Deterministic stand-in for a trained voice.
///
/// Each whitespace token becomes a 0.150 s sine tone followed by silence up to 0.200 s, at
/// 22050 Hz. The tone frequency is `110 + (fnv1a64(token) mod 440)` Hz and its amplitude
/// 0.5. At 22050 Hz a token slot is 4410 samples: 3308 of tone (`round(0.150 * sr)`) and
/// 1102 of silence.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend;

pub const MOCK_SAMPLE_RATE: u32 = 22050;
pub const MOCK_TONE_SECONDS: f64 = 0.150;
pub const MOCK_SLOT_SECONDS: f64 = 0.200;
const MOCK_AMPLITUDE: f64 = 0.5;

/// 64-bit FNV-1a over the UTF-8 bytes.
pub fn fnv1a64(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn mock_tone_frequency(token: &str) -> f64 {
    110.0 + (fnv1a64(token) % 440) as f64
}

pub fn mock_synthesize(req: &SynthRequest) -> AudioClip {
    let sr = MOCK_SAMPLE_RATE;
    let slot = time_to_index(MOCK_SLOT_SECONDS, sr);
    let tone = time_to_index(MOCK_TONE_SECONDS, sr);
    let tokens: Vec<&str> = req.text.split_whitespace().collect();
    let mut samples = Vec::with_capacity(slot * tokens.len());
    for tok in tokens {
        let f = mock_tone_frequency(tok);
        samples.extend((0..tone).map(|i| {
            MOCK_AMPLITUDE * (std::f64::consts::TAU * f * i as f64 / sr as f64).sin()
        }));
        samples.resize(samples.len() + slot - tone, 0.0);
    }
    AudioClip {
        samples,
        sample_rate: sr,
    }
}

impl SynthBackend for MockBackend {
    fn synthesize(&self, req: &SynthRequest) -> Result<AudioClip, SynthError> {
        Ok(mock_synthesize(req))
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            sample_rate: MOCK_SAMPLE_RATE,
            max_text_len: None,
            max_concurrency: usize::MAX,
        }
    }
}

/// Client for a remote synthesis server speaking the protocol in the module docs.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    endpoint: String,
    timeout: Duration,
    capabilities: Capabilities,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, sample_rate: u32) -> Self {
        HttpBackend {
            endpoint: endpoint.into(),
            timeout,
            capabilities: Capabilities {
                sample_rate,
                max_text_len: None,
                max_concurrency: DEFAULT_CONCURRENCY,
            },
        }
    }

    pub fn with_max_concurrency(mut self, n: usize) -> Self {
        self.capabilities.max_concurrency = n.max(1);
        self
    }

    pub fn with_max_text_len(mut self, n: Option<usize>) -> Self {
        self.capabilities.max_text_len = n;
        self
    }
}

impl SynthBackend for HttpBackend {
    fn synthesize(&self, req: &SynthRequest) -> Result<AudioClip, SynthError> {
        let mut req = req.clone();
        req.sample_rate_hint.get_or_insert(self.capabilities.sample_rate);
        http_synthesize(&self.endpoint, &req, self.timeout)
    }

    fn capabilities(&self) -> Capabilities {
        self.capabilities
    }
}

fn map_ureq(e: ureq::Error) -> SynthError {
    match e {
        ureq::Error::Timeout(_) => SynthError::Timeout,
        ureq::Error::StatusCode(code) => SynthError::Status(code),
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => SynthError::Timeout,
        other => SynthError::Transport(other.to_string()),
    }
}

/// One blocking `POST {endpoint}/synthesize` round trip.
pub fn http_synthesize(endpoint: &str, req: &SynthRequest, timeout: Duration) -> Result<AudioClip, SynthError> {
    if req.text.trim().is_empty() {
        return Err(SynthError::EmptyText);
    }
    let url = format!("{}/synthesize", endpoint.trim_end_matches('/'));
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let body = serde_json::to_vec(req).expect("request serializes");
    let mut resp = agent
        .post(&url)
        .header("Content-Type", "application/json")
        .header("Accept", "audio/wav")
        .send(&body[..])
        .map_err(map_ureq)?;
    let status = resp.status().as_u16();
    if !(200..300).contains(&status) {
        return Err(SynthError::Status(status));
    }
    let mut body = Vec::new();
    resp.body_mut()
        .as_reader()
        .take(MAX_RESPONSE_BYTES)
        .read_to_end(&mut body)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::TimedOut => SynthError::Timeout,
            _ => SynthError::Transport(e.to_string()),
        })?;
    Ok(read_wav(body.as_slice())?)
}

fn checked_synthesize(backend: &dyn SynthBackend, text: &str, voice: &Option<String>) -> Result<AudioClip, SynthError> {
    let caps = backend.capabilities();
    if let Some(max) = caps.max_text_len {
        let len = text.chars().count();
        if len > max {
            return Err(SynthError::TextTooLong { len, max });
        }
    }
    let clip = backend.synthesize(&SynthRequest::new(text)?.with_voice(voice.clone()))?;
    if clip.sample_rate != caps.sample_rate {
        return Err(SynthError::RateMismatch {
            expected: caps.sample_rate,
            got: clip.sample_rate,
        });
    }
    Ok(clip)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentTrace {
    pub index: usize,
    pub text: String,
    pub n_tokens: usize,
    pub duration: f64,
    /// Offset of the segment in the joined output, seconds.
    pub start: f64,
}

#[derive(Debug, Clone)]
pub struct LongSynthOptions {
    pub min_words: usize,
    pub gap: f64,
    /// Upper bound on in-flight requests; the backend's own limit also applies.
    pub concurrency: usize,
    pub voice: Option<String>,
}

impl Default for LongSynthOptions {
    fn default() -> Self {
        LongSynthOptions {
            min_words: crate::phrase::DEFAULT_MIN_WORDS,
            gap: DEFAULT_GAP,
            concurrency: DEFAULT_CONCURRENCY,
            voice: None,
        }
    }
}

/// Synthesizes `tokens` unit by unit.
///
/// Units come from [`segment_text`] with punctuation honoured. Calls may run concurrently
/// but the output and trace follow segment order. If any unit fails, the whole call fails
/// naming the first failing unit and no audio is returned.
pub fn synthesize_long<S: AsRef<str>>(
    backend: &dyn SynthBackend,
    tokens: &[S],
    lexicon: &BreakLexicon,
    opts: &LongSynthOptions,
) -> Result<(AudioClip, Vec<SegmentTrace>), SynthError> {
    let segments: Vec<String> = segment_text(tokens, lexicon, opts.min_words, true)
        .into_iter()
        .map(|s| s.join(" "))
        .collect();
    synthesize_segments(backend, &segments, opts)
}

/// Sentence-level baseline: the whole text in one call.
pub fn synthesize_sentence<S: AsRef<str>>(
    backend: &dyn SynthBackend,
    tokens: &[S],
    voice: Option<String>,
) -> Result<(AudioClip, Vec<SegmentTrace>), SynthError> {
    let text = tokens.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
    let opts = LongSynthOptions {
        voice,
        ..LongSynthOptions::default()
    };
    synthesize_segments(backend, &[text], &opts)
}

/// Synthesizes pre-split units and joins them with `opts.gap` seconds of silence.
pub fn synthesize_segments(
    backend: &dyn SynthBackend,
    segments: &[String],
    opts: &LongSynthOptions,
) -> Result<(AudioClip, Vec<SegmentTrace>), SynthError> {
    if segments.is_empty() {
        return Err(SynthError::NoSegments);
    }
    let total = segments.len();
    let workers = opts
        .concurrency
        .min(backend.capabilities().max_concurrency)
        .min(total)
        .max(1);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<AudioClip, SynthError>>>> =
        Mutex::new((0..total).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= total {
                    break;
                }
                let r = checked_synthesize(backend, &segments[i], &opts.voice);
                let failed = r.is_err();
                results.lock().unwrap()[i] = Some(r);
                if failed {
                    // Stop handing out new work.
                    next.store(total, Ordering::Relaxed);
                }
            });
        }
    });

    let results = results.into_inner().unwrap();
    let mut clips = Vec::with_capacity(total);
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Some(Ok(c)) => clips.push(c),
            Some(Err(e)) => {
                return Err(SynthError::Segment {
                    number: i + 1,
                    total,
                    text: segments[i].clone(),
                    source: Box::new(e),
                })
            }
            // Skipped after an earlier failure; a lower index already failed or a later
            // one did and is reported below.
            None => continue,
        }
    }
    if clips.len() != total {
        // Only reachable when a higher-index unit failed first and halted dispatch.
        unreachable!("dispatch halted without a recorded failure");
    }

    let out = concat_with_gaps(&clips, opts.gap)?;
    let sr = out.sample_rate;
    let gap_len = time_to_index(opts.gap, sr);
    let mut offset = 0usize;
    let trace = clips
        .iter()
        .zip(segments)
        .enumerate()
        .map(|(index, (clip, text))| {
            let t = SegmentTrace {
                index,
                text: text.clone(),
                n_tokens: text.split_whitespace().count(),
                duration: clip.duration(),
                start: offset as f64 / sr as f64,
            };
            offset += clip.len() + gap_len;
            t
        })
        .collect();
    Ok((out, trace))
}
