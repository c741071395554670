//! Mono PCM-16 clips: WAV I/O, sample-exact slicing and joining, energy-based silence
//! detection and autocorrelation F0 tracking.
//!
//! Every conversion from seconds to a sample index goes through [`time_to_index`]
//! (`round(t * sample_rate)`), so slices taken at shared cut points tile a clip exactly.

use std::io::{self, Cursor, Read, Write};

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum AudioError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("mono required, got {0} channels")]
    NotMono(u16),
    #[error("unsupported WAV encoding: {0}")]
    Unsupported(String),
    #[error("malformed or truncated WAV: {0}")]
    Malformed(String),
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("slice [{t0}, {t1}] outside clip of {duration}s")]
    OutOfRange { t0: f64, t1: f64, duration: f64 },
    #[error(
        "mixed sample rates ({0} Hz and {1} Hz); resample the corpus to one rate \
         (22.05 kHz is the usual TTS convention) before processing"
    )]
    MixedRates(u32, u32),
    #[error("no clips to join")]
    NoClips,
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

/// Full-scale value for 16-bit PCM.
const PCM16_SCALE: f64 = 32768.0;

/// Floor used for the level of an all-zero frame.
pub const SILENCE_FLOOR_DB: f64 = -120.0;

/// Mono audio with samples nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::NonFinite(i));
        }
        Ok(AudioClip {
            samples,
            sample_rate,
        })
    }

    pub fn silence(duration: f64, sample_rate: u32) -> Self {
        AudioClip {
            samples: vec![0.0; time_to_index(duration, sample_rate)],
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Samples `[start, end)` by index, clamped to the clip.
    pub fn slice_indices(&self, start: usize, end: usize) -> AudioClip {
        let end = end.min(self.len());
        let start = start.min(end);
        AudioClip {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// `round(t * sample_rate)`, saturating at zero.
pub fn time_to_index(t: f64, sample_rate: u32) -> usize {
    (t * sample_rate as f64).round().max(0.0) as usize
}

pub fn read_wav<R: Read>(source: R) -> Result<AudioClip, AudioError> {
    let reader = hound::WavReader::new(source).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(AudioError::NotMono(spec.channels));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(AudioError::Unsupported(format!(
            "{:?} {}-bit (PCM 16-bit required)",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
        .collect::<Result<Vec<_>, _>>()
        .map_err(map_hound)?;
    AudioClip::new(samples, spec.sample_rate)
}

fn map_hound(e: hound::Error) -> AudioError {
    match e {
        hound::Error::IoError(io) if io.kind() == io::ErrorKind::UnexpectedEof => {
            AudioError::Malformed("unexpected end of data".into())
        }
        hound::Error::IoError(io) => AudioError::Io(io),
        hound::Error::FormatError(m) => AudioError::Malformed(m.into()),
        hound::Error::Unsupported => AudioError::Unsupported("non-PCM format".into()),
        other => AudioError::Unsupported(other.to_string()),
    }
}

/// Encodes `clip` as 16-bit PCM WAV. Samples are clamped to the PCM range and rounded.
pub fn wav_bytes(clip: &AudioClip) -> Result<Vec<u8>, AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::with_capacity(44 + 2 * clip.len()));
    {
        let mut writer = hound::WavWriter::new(&mut cursor, spec).map_err(map_hound)?;
        let mut w16 = writer.get_i16_writer(clip.len() as u32);
        for &s in &clip.samples {
            let q = (s * PCM16_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64);
            w16.write_sample(q as i16);
        }
        w16.flush().map_err(map_hound)?;
        writer.finalize().map_err(map_hound)?;
    }
    Ok(cursor.into_inner())
}

/// Writes `clip` as WAV and returns the number of bytes written.
pub fn write_wav<W: Write>(clip: &AudioClip, mut dest: W) -> Result<usize, AudioError> {
    let bytes = wav_bytes(clip)?;
    dest.write_all(&bytes)?;
    dest.flush()?;
    Ok(bytes.len())
}

/// Samples `[round(t0*sr), round(t1*sr))`. Times may overshoot the end by half a sample.
pub fn slice(clip: &AudioClip, t0: f64, t1: f64) -> Result<AudioClip, AudioError> {
    let duration = clip.duration();
    let slack = 0.5 / clip.sample_rate as f64;
    if !(t0 >= 0.0 && t0 <= t1 && t1 <= duration + slack) {
        return Err(AudioError::OutOfRange { t0, t1, duration });
    }
    let start = time_to_index(t0, clip.sample_rate);
    let end = time_to_index(t1, clip.sample_rate);
    Ok(clip.slice_indices(start, end))
}

/// Joins clips in order with `round(gap * sr)` zero samples between neighbours.
pub fn concat_with_gaps(clips: &[AudioClip], gap: f64) -> Result<AudioClip, AudioError> {
    let first = clips.first().ok_or(AudioError::NoClips)?;
    if !(gap >= 0.0 && gap.is_finite()) {
        return Err(AudioError::BadParams(format!("gap must be >= 0, got {gap}")));
    }
    let sr = first.sample_rate;
    if let Some(c) = clips.iter().find(|c| c.sample_rate != sr) {
        return Err(AudioError::MixedRates(sr, c.sample_rate));
    }
    let gap_len = time_to_index(gap, sr);
    let total = clips.iter().map(AudioClip::len).sum::<usize>() + gap_len * (clips.len() - 1);
    let mut samples = Vec::with_capacity(total);
    for (i, c) in clips.iter().enumerate() {
        if i > 0 {
            samples.resize(samples.len() + gap_len, 0.0);
        }
        samples.extend_from_slice(&c.samples);
    }
    Ok(AudioClip {
        samples,
        sample_rate: sr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilenceParams {
    pub frame: f64,
    pub hop: f64,
    pub threshold_db: f64,
    pub min_dur: f64,
}

impl Default for SilenceParams {
    fn default() -> Self {
        SilenceParams {
            frame: 0.025,
            hop: 0.010,
            threshold_db: -40.0,
            min_dur: 0.0,
        }
    }
}

/// Frame start indices covering the clip: full frames every `hop`, the last one truncated
/// at the clip end.
fn frame_starts(len: usize, frame: usize, hop: usize) -> impl Iterator<Item = usize> {
    let n = if len == 0 {
        0
    } else {
        1 + len.saturating_sub(frame).div_ceil(hop)
    };
    (0..n).map(move |i| i * hop)
}

fn rms_db(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return SILENCE_FLOOR_DB;
    }
    let ms = samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64;
    (10.0 * ms.log10()).max(SILENCE_FLOOR_DB)
}

/// Maximal runs of frames whose RMS level is below `threshold_db` dBFS, as
/// `(start, end)` seconds, keeping runs at least `min_dur` long.
pub fn detect_silences_energy(
    clip: &AudioClip,
    params: &SilenceParams,
) -> Result<Vec<(f64, f64)>, AudioError> {
    let SilenceParams {
        frame,
        hop,
        threshold_db,
        min_dur,
    } = *params;
    if !(hop > 0.0 && frame >= hop && frame.is_finite()) {
        return Err(AudioError::BadParams(format!(
            "need frame >= hop > 0, got frame {frame}, hop {hop}"
        )));
    }
    if !threshold_db.is_finite() || !(min_dur >= 0.0) {
        return Err(AudioError::BadParams("threshold and min_dur must be finite".into()));
    }
    let sr = clip.sample_rate;
    let frame_len = time_to_index(frame, sr).max(1);
    let hop_len = time_to_index(hop, sr).max(1);
    let len = clip.len();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for start in frame_starts(len, frame_len, hop_len) {
        let end = (start + frame_len).min(len);
        if rms_db(&clip.samples[start..end]) >= threshold_db {
            continue;
        }
        match runs.last_mut() {
            Some(last) if start <= last.1 => last.1 = end,
            _ => runs.push((start, end)),
        }
    }
    let to_s = |i: usize| i as f64 / sr as f64;
    Ok(runs
        .into_iter()
        .map(|(a, b)| (to_s(a), to_s(b)))
        .filter(|(a, b)| b - a >= min_dur)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F0Params {
    pub f0_min: f64,
    pub f0_max: f64,
    pub frame: f64,
    pub hop: f64,
    pub voicing_threshold: f64,
}

impl Default for F0Params {
    /// 40 ms frames: two periods of the 60 Hz floor have to fit in one frame.
    fn default() -> Self {
        F0Params {
            f0_min: 60.0,
            f0_max: 400.0,
            frame: 0.040,
            hop: 0.010,
            voicing_threshold: 0.30,
        }
    }
}

/// Per-frame F0 in Hz, `None` for unvoiced frames. Frame `i` starts at `i * frame_hop`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F0Track {
    pub frame_hop: f64,
    pub values: Vec<Option<f64>>,
}

impl F0Track {
    pub fn voiced(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn summary(&self) -> F0Summary {
        let voiced: Vec<f64> = self.voiced().collect();
        if voiced.is_empty() {
            return F0Summary::Undefined;
        }
        let n = voiced.len() as f64;
        let mean = voiced.iter().sum::<f64>() / n;
        let var = voiced.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        F0Summary::Defined {
            voiced_frames: voiced.len(),
            mean,
            std: var.sqrt(),
        }
    }
}

/// Utterance-level pitch statistics over voiced frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum F0Summary {
    Defined {
        voiced_frames: usize,
        mean: f64,
        std: f64,
    },
    /// No voiced frames.
    Undefined,
}

impl F0Summary {
    pub fn mean(&self) -> Option<f64> {
        match self {
            F0Summary::Defined { mean, .. } => Some(*mean),
            F0Summary::Undefined => None,
        }
    }
}

/// Normalized-autocorrelation pitch tracker.
///
/// Each frame is mean-removed and correlated against itself for lags in
/// `[sr/f0_max, sr/f0_min]`. The shortest-lag local maximum reaching 90% of the window's
/// best correlation is refined by parabolic interpolation; the frame is voiced when that
/// peak correlation reaches `voicing_threshold`.
pub fn estimate_f0(clip: &AudioClip, params: &F0Params) -> Result<(F0Track, F0Summary), AudioError> {
    let F0Params {
        f0_min,
        f0_max,
        frame,
        hop,
        voicing_threshold,
    } = *params;
    if !(f0_min > 0.0 && f0_min < f0_max) {
        return Err(AudioError::BadParams(format!(
            "need 0 < f0_min < f0_max, got {f0_min}..{f0_max}"
        )));
    }
    if !(hop > 0.0) || frame < 2.0 / f0_min - 1e-12 {
        return Err(AudioError::BadParams(format!(
            "frame must span two periods of f0_min ({:.4}s) and hop must be positive",
            2.0 / f0_min
        )));
    }
    let sr = clip.sample_rate as f64;
    let frame_len = time_to_index(frame, clip.sample_rate);
    let hop_len = time_to_index(hop, clip.sample_rate).max(1);
    let min_lag = sr / f0_max;
    let max_lag = sr / f0_min;
    let lag_lo = (min_lag.floor() as usize).max(1);
    let lag_hi = (max_lag.ceil() as usize).min(frame_len.saturating_sub(2));

    let mut values = Vec::new();
    let mut start = 0;
    let mut buf = vec![0.0; frame_len];
    while frame_len > 0 && start + frame_len <= clip.len() && lag_lo < lag_hi {
        let raw = &clip.samples[start..start + frame_len];
        let mean = raw.iter().sum::<f64>() / frame_len as f64;
        for (b, &s) in buf.iter_mut().zip(raw) {
            *b = s - mean;
        }
        values.push(frame_pitch(&buf, lag_lo, lag_hi, min_lag, max_lag, voicing_threshold).map(|lag| sr / lag));
        start += hop_len;
    }
    let track = F0Track {
        frame_hop: hop_len as f64 / sr,
        values,
    };
    let summary = track.summary();
    Ok((track, summary))
}

fn frame_pitch(
    x: &[f64],
    lag_lo: usize,
    lag_hi: usize,
    min_lag: f64,
    max_lag: f64,
    voicing_threshold: f64,
) -> Option<f64> {
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v * v);
    }
    if prefix[n] <= 0.0 {
        return None;
    }
    // r[k] is the correlation at lag (lag_lo - 1 + k); one extra lag on each side for
    // peak picking and interpolation.
    let first = lag_lo - 1;
    let last = (lag_hi + 1).min(n - 1);
    let r: Vec<f64> = (first..=last)
        .map(|lag| {
            let m = n - lag;
            let dot: f64 = x[..m].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
            let e0 = prefix[m];
            let e1 = prefix[n] - prefix[lag];
            let denom = (e0 * e1).sqrt();
            if denom > 0.0 {
                dot / denom
            } else {
                0.0
            }
        })
        .collect();
    let inner = 1..r.len() - 1;
    let best = inner.clone().map(|k| r[k]).fold(f64::NEG_INFINITY, f64::max);
    if !(best > 0.0) {
        return None;
    }
    let k = inner
        .clone()
        .find(|&k| r[k] >= 0.9 * best && r[k] >= r[k - 1] && r[k] >= r[k + 1])
        .or_else(|| inner.clone().find(|&k| r[k] == best))?;
    if r[k] < voicing_threshold {
        return None;
    }
    let (a, b, c) = (r[k - 1], r[k], r[k + 1]);
    let curvature = a - 2.0 * b + c;
    let delta = if curvature < 0.0 {
        (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some(((first + k) as f64 + delta).clamp(min_lag, max_lag))
}
