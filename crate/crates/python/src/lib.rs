//! Python module `pausecut`.
//!
//! Structured results (reports, fits, verdicts) come back as plain dicts decoded from the
//! same JSON the CLI emits, so both front ends agree field for field.

use std::collections::HashMap;

use pausecut::align::{parse_lab, parse_textgrid};
use pausecut::audio::{self, read_wav, wav_bytes, F0Params};
use pausecut::ipu::{extract_ipus, find_ipu_boundaries};
use pausecut::phrase::{segment_text, LexiconEntry};
use pausecut::stats::{self, ngram_loglik, ngram_train};
use pausecut::{audit, synth, ExtractConfig, SplitPoint, TimeUnit};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde::Serialize;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (json,))
}

/// Mono audio with float samples in [-1, 1].
#[pyclass(module = "pausecut", name = "AudioClip", skip_from_py_object)]
pub struct PyAudioClip {
    inner: pausecut::AudioClip,
}

#[pymethods]
impl PyAudioClip {
    #[new]
    fn new(samples: Vec<f64>, sample_rate: u32) -> PyResult<Self> {
        Ok(PyAudioClip {
            inner: pausecut::AudioClip::new(samples, sample_rate).map_err(err)?,
        })
    }

    /// Decodes a 16-bit PCM mono WAV byte string.
    #[staticmethod]
    fn from_wav(data: &[u8]) -> PyResult<Self> {
        Ok(PyAudioClip {
            inner: read_wav(data).map_err(err)?,
        })
    }

    fn to_wav<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &wav_bytes(&self.inner).map_err(err)?))
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples.clone()
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn slice(&self, t0: f64, t1: f64) -> PyResult<Self> {
        Ok(PyAudioClip {
            inner: audio::slice(&self.inner, t0, t1).map_err(err)?,
        })
    }

    /// `(start, end)` seconds of low-energy stretches.
    #[pyo3(signature = (threshold_db = -40.0, min_dur = 0.0))]
    fn silences(&self, threshold_db: f64, min_dur: f64) -> PyResult<Vec<(f64, f64)>> {
        let params = audio::SilenceParams {
            threshold_db,
            min_dur,
            ..Default::default()
        };
        audio::detect_silences_energy(&self.inner, &params).map_err(err)
    }

    /// Mean F0 in Hz over voiced frames, or None when nothing is voiced.
    #[pyo3(signature = (f0_min = 60.0, f0_max = 400.0))]
    fn mean_f0(&self, f0_min: f64, f0_max: f64) -> PyResult<Option<f64>> {
        let params = F0Params {
            f0_min,
            f0_max,
            frame: F0Params::default().frame.max(2.0 / f0_min),
            ..F0Params::default()
        };
        let (_, summary) = audio::estimate_f0(&self.inner, &params).map_err(err)?;
        Ok(summary.mean())
    }

    fn __eq__(&self, other: PyRef<'_, Self>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "AudioClip({} samples, {} Hz, {:.3} s)",
            self.inner.len(),
            self.inner.sample_rate,
            self.inner.duration()
        )
    }
}

/// Joins clips with `gap` seconds of silence between neighbours.
#[pyfunction]
#[pyo3(signature = (clips, gap = 0.0))]
fn concat(clips: Vec<PyRef<'_, PyAudioClip>>, gap: f64) -> PyResult<PyAudioClip> {
    let owned: Vec<pausecut::AudioClip> = clips.iter().map(|c| c.inner.clone()).collect();
    Ok(PyAudioClip {
        inner: audio::concat_with_gaps(&owned, gap).map_err(err)?,
    })
}

/// Word-level alignment of one utterance.
#[pyclass(module = "pausecut", name = "AlignmentTrack", skip_from_py_object)]
pub struct PyAlignmentTrack {
    inner: pausecut::AlignmentTrack,
}

#[pymethods]
impl PyAlignmentTrack {
    /// From `(label, start, end)` triples.
    #[new]
    fn new(segments: Vec<(String, f64, f64)>) -> PyResult<Self> {
        let segs = segments
            .into_iter()
            .map(|(l, a, b)| pausecut::Segment::new(l, a, b))
            .collect();
        Ok(PyAlignmentTrack {
            inner: pausecut::AlignmentTrack::new(segs).map_err(err)?,
        })
    }

    /// Parses `start end label` lines; `unit` is "seconds" or "htk".
    #[staticmethod]
    #[pyo3(signature = (text, unit = "seconds"))]
    fn from_lab(text: &str, unit: &str) -> PyResult<Self> {
        let unit: TimeUnit = unit.parse().map_err(err)?;
        Ok(PyAlignmentTrack {
            inner: parse_lab(text.as_bytes(), unit).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (text, tier = "words"))]
    fn from_textgrid(text: &str, tier: &str) -> PyResult<Self> {
        Ok(PyAlignmentTrack {
            inner: parse_textgrid(text.as_bytes(), tier).map_err(err)?,
        })
    }

    #[getter]
    fn segments(&self) -> Vec<(String, f64, f64)> {
        self.inner
            .segments
            .iter()
            .map(|s| (s.label.clone(), s.t_start, s.t_end))
            .collect()
    }

    #[getter]
    fn words(&self) -> Vec<String> {
        self.inner.words().map(|s| s.label.clone()).collect()
    }

    fn to_lab(&self) -> String {
        self.inner.to_lab()
    }
}

fn extract_config(t_sil: f64, min_sp: f64, split_point: &str, min_ipu_words: Option<usize>) -> PyResult<ExtractConfig> {
    let split_point: SplitPoint = split_point.parse().map_err(err)?;
    let cfg = ExtractConfig {
        t_sil,
        min_sp,
        split_point,
        min_ipu_words,
        ..ExtractConfig::default()
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Boundary pauses as `(start, end)` seconds.
#[pyfunction]
#[pyo3(signature = (track, t_sil = 0.1, min_sp = 0.02))]
fn ipu_boundaries(track: PyRef<'_, PyAlignmentTrack>, t_sil: f64, min_sp: f64) -> PyResult<Vec<(f64, f64)>> {
    let cfg = extract_config(t_sil, min_sp, "midpoint", None)?;
    Ok(find_ipu_boundaries(&track.inner, &cfg)
        .boundaries
        .iter()
        .map(|b| (b.t_start, b.t_end))
        .collect())
}

/// Splits one utterance into IPUs. Returns `(record dict, AudioClip)` pairs.
#[pyfunction]
#[pyo3(signature = (utt_id, tokens, clip, track, t_sil = 0.1, min_sp = 0.02, split_point = "midpoint", min_ipu_words = None))]
#[allow(clippy::too_many_arguments)]
fn extract<'py>(
    py: Python<'py>,
    utt_id: String,
    tokens: Vec<String>,
    clip: PyRef<'_, PyAudioClip>,
    track: PyRef<'_, PyAlignmentTrack>,
    t_sil: f64,
    min_sp: f64,
    split_point: &str,
    min_ipu_words: Option<usize>,
) -> PyResult<Vec<(Bound<'py, PyAny>, PyAudioClip)>> {
    let cfg = extract_config(t_sil, min_sp, split_point, min_ipu_words)?;
    let utt = pausecut::Utterance {
        audio_path: format!("{utt_id}.wav"),
        id: utt_id,
        tokens,
        sample_rate: clip.inner.sample_rate,
        duration: clip.inner.duration(),
    };
    extract_ipus(&utt, &clip.inner, &track.inner, &cfg)
        .map_err(err)?
        .into_iter()
        .map(|(rec, c)| Ok((to_py(py, &rec)?, PyAudioClip { inner: c })))
        .collect()
}

/// Ranked phrase-break words.
#[pyclass(module = "pausecut", name = "BreakLexicon", skip_from_py_object)]
pub struct PyBreakLexicon {
    inner: pausecut::BreakLexicon,
}

#[pymethods]
impl PyBreakLexicon {
    /// From a word-to-count mapping; `k` entries are active.
    #[new]
    #[pyo3(signature = (counts, k = 20))]
    fn new(counts: HashMap<String, u64>, k: usize) -> PyResult<Self> {
        let entries = counts
            .into_iter()
            .map(|(word, count)| LexiconEntry { word, count })
            .collect();
        Ok(PyBreakLexicon {
            inner: pausecut::BreakLexicon::from_entries(entries, k).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (json, k = 20))]
    fn from_json(json: &str, k: usize) -> PyResult<Self> {
        Ok(PyBreakLexicon {
            inner: pausecut::BreakLexicon::from_json(json, k).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn active(&self) -> Vec<(String, u64)> {
        self.inner.active().iter().map(|e| (e.word.clone(), e.count)).collect()
    }

    fn is_break(&self, word: &str) -> bool {
        self.inner.is_break(word)
    }
}

/// Splits tokens into synthesis units.
#[pyfunction]
#[pyo3(signature = (tokens, lexicon = None, min_words = 3, punctuation = true))]
fn segment(
    tokens: Vec<String>,
    lexicon: Option<PyRef<'_, PyBreakLexicon>>,
    min_words: usize,
    punctuation: bool,
) -> Vec<Vec<String>> {
    let empty = pausecut::BreakLexicon::empty();
    let lex = lexicon.as_ref().map_or(&empty, |l| &l.inner);
    segment_text(&tokens, lex, min_words, punctuation)
}

/// Deterministic tone rendering of `text`, 0.2 s per token at 22050 Hz.
#[pyfunction]
fn mock_synthesize(text: &str) -> PyResult<PyAudioClip> {
    let req = synth::SynthRequest::new(text).map_err(err)?;
    Ok(PyAudioClip {
        inner: synth::mock_synthesize(&req),
    })
}

/// Segments `tokens` and renders each unit with the mock voice. Returns `(clip, trace)`.
#[pyfunction]
#[pyo3(signature = (tokens, lexicon = None, min_words = 3, gap = 0.1))]
fn synthesize_mock<'py>(
    py: Python<'py>,
    tokens: Vec<String>,
    lexicon: Option<PyRef<'_, PyBreakLexicon>>,
    min_words: usize,
    gap: f64,
) -> PyResult<(PyAudioClip, Bound<'py, PyAny>)> {
    let empty = pausecut::BreakLexicon::empty();
    let lex = lexicon.as_ref().map_or(&empty, |l| &l.inner);
    let opts = synth::LongSynthOptions {
        min_words,
        gap,
        ..Default::default()
    };
    let (clip, trace) = synth::synthesize_long(&pausecut::MockBackend, &tokens, lex, &opts).map_err(err)?;
    Ok((PyAudioClip { inner: clip }, to_py(py, &trace)?))
}

#[pyfunction]
fn relative_reduction(pairs: Vec<(f64, f64)>) -> PyResult<f64> {
    stats::relative_reduction(&pairs).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (prefer_a, prefer_b, equal = 0))]
fn pc_tally(py: Python<'_>, prefer_a: u64, prefer_b: u64, equal: u64) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &stats::pc_tally(prefer_a, prefer_b, equal).map_err(err)?)
}

#[pyfunction]
fn fit_gamma(py: Python<'_>, samples: Vec<f64>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &stats::fit_gamma(&samples).map_err(err)?)
}

#[pyfunction]
fn duration_summary(py: Python<'_>, durations: Vec<f64>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &stats::duration_summary(&durations).map_err(err)?)
}

/// Add-one smoothed n-gram model.
#[pyclass(module = "pausecut", name = "NgramModel", skip_from_py_object)]
pub struct PyNgramModel {
    inner: pausecut::NgramModel,
}

#[pymethods]
impl PyNgramModel {
    #[new]
    #[pyo3(signature = (sentences, order = 3))]
    fn new(sentences: Vec<Vec<String>>, order: usize) -> PyResult<Self> {
        Ok(PyNgramModel {
            inner: ngram_train(&sentences, order).map_err(err)?,
        })
    }

    fn loglik(&self, sentence: Vec<String>) -> f64 {
        ngram_loglik(&self.inner, &sentence)
    }

    fn prob(&self, history: Vec<String>, word: &str) -> PyResult<f64> {
        if history.len() + 1 != self.inner.order() {
            return Err(err(format!("history must hold {} tokens", self.inner.order() - 1)));
        }
        Ok(self.inner.prob(&history, word))
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }
}

/// Repetition/skip/insertion/substitution counts for one utterance.
#[pyfunction]
fn audit_transcript(py: Python<'_>, reference: Vec<String>, hypothesis: Vec<String>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &audit::audit_transcript(&reference, &hypothesis))
}

#[pyfunction]
#[pyo3(signature = (repetitions, skips, n_utterances, other_insertions = 0, substitutions = 0))]
fn error_rates(
    py: Python<'_>,
    repetitions: u64,
    skips: u64,
    n_utterances: u64,
    other_insertions: u64,
    substitutions: u64,
) -> PyResult<Bound<'_, PyAny>> {
    let counts = pausecut::ErrorCounts {
        repetitions,
        skips,
        other_insertions,
        substitutions,
        n_utterances,
    };
    to_py(py, &audit::error_rates(&counts).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (stop_probs, expected_frame, threshold = 0.5, tolerance = 10))]
fn eou_audit(
    py: Python<'_>,
    stop_probs: Vec<f64>,
    expected_frame: usize,
    threshold: f64,
    tolerance: usize,
) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &audit::eou_audit(&stop_probs, expected_frame, threshold, tolerance).map_err(err)?)
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    pausecut::tokenize(text)
}

#[pymodule(name = "pausecut")]
fn pausecut_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAudioClip>()?;
    m.add_class::<PyAlignmentTrack>()?;
    m.add_class::<PyBreakLexicon>()?;
    m.add_class::<PyNgramModel>()?;
    m.add_function(wrap_pyfunction!(concat, m)?)?;
    m.add_function(wrap_pyfunction!(ipu_boundaries, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(mock_synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_mock, m)?)?;
    m.add_function(wrap_pyfunction!(relative_reduction, m)?)?;
    m.add_function(wrap_pyfunction!(pc_tally, m)?)?;
    m.add_function(wrap_pyfunction!(fit_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(duration_summary, m)?)?;
    m.add_function(wrap_pyfunction!(audit_transcript, m)?)?;
    m.add_function(wrap_pyfunction!(error_rates, m)?)?;
    m.add_function(wrap_pyfunction!(eou_audit, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    Ok(())
}
