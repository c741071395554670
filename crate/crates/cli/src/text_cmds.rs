use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use clap::Args;
use pausecut::audio::wav_bytes;
use pausecut::phrase::{build_break_lexicon, segment_text};
use pausecut::synth::{synthesize_long, synthesize_sentence, HttpBackend, LongSynthOptions, SegmentTrace};
use pausecut::{BreakLexicon, MockBackend, SynthBackend};
use serde::Serialize;

use crate::corpus_cmds::read_any_manifest;
use crate::output::table;
use crate::{Ctx, Outcome, UsageError};

#[derive(Debug, Args)]
pub struct LexiconArgs {
    /// IPU manifest produced by `extract`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Also count the last word of sentence-final IPUs.
    #[arg(long)]
    pub include_terminal: bool,
    /// Save the full lexicon (JSON array of {word, count}) for `segment` and `synth`.
    #[arg(long, value_name = "FILE")]
    pub save: Option<PathBuf>,
}

#[derive(Serialize)]
struct LexiconReport<'a> {
    k: usize,
    include_terminal: bool,
    active: &'a [pausecut::phrase::LexiconEntry],
    entries: &'a [pausecut::phrase::LexiconEntry],
}

pub fn lexicon(ctx: &Ctx, args: LexiconArgs) -> anyhow::Result<Outcome> {
    let manifest = read_any_manifest(&args.manifest)?;
    let lex = build_break_lexicon(&manifest, ctx.cfg.lexicon_k.value, args.include_terminal)
        .with_context(|| format!("building lexicon from {}", args.manifest.display()))?;
    if let Some(path) = &args.save {
        fs::write(path, lex.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    let report = LexiconReport {
        k: lex.k(),
        include_terminal: args.include_terminal,
        active: lex.active(),
        entries: lex.entries(),
    };
    ctx.sink.emit(&report, |out| {
        let rows: Vec<Vec<String>> = lex
            .active()
            .iter()
            .enumerate()
            .map(|(i, e)| vec![(i + 1).to_string(), e.word.clone(), e.count.to_string()])
            .collect();
        table(out, &["Rank".into(), "Word".into(), "Count".into()], &rows)
    })?;
    Ok(Outcome::Complete)
}

/// Text given inline, read from a file, or read from stdin.
#[derive(Debug, Args)]
pub struct TextInput {
    /// Text to process.
    #[arg(long, conflicts_with = "input")]
    pub text: Option<String>,
    /// File to read text from; `-` or neither option reads stdin.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
}

impl TextInput {
    fn read(&self) -> anyhow::Result<String> {
        if let Some(t) = &self.text {
            return Ok(t.clone());
        }
        match &self.input {
            Some(p) if p != Path::new("-") => {
                fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
            }
            _ => {
                let mut s = String::new();
                io::stdin().read_to_string(&mut s).context("reading stdin")?;
                Ok(s)
            }
        }
    }
}

fn load_lexicon(path: Option<&Path>, k: usize) -> anyhow::Result<BreakLexicon> {
    let Some(path) = path else {
        return Ok(BreakLexicon::empty());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading lexicon {}", path.display()))?;
    BreakLexicon::from_json(&text, k)
        .map_err(|e| UsageError(format!("lexicon {}: {e}", path.display())).into())
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub input: TextInput,
    /// Break lexicon saved by `lexicon --save`.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Ignore punctuation when splitting (marks are kept in the output).
    #[arg(long)]
    pub no_punctuation: bool,
}

pub fn segment(ctx: &Ctx, args: SegmentArgs) -> anyhow::Result<Outcome> {
    let text = args.input.read()?;
    let lex = load_lexicon(args.lexicon.as_deref(), ctx.cfg.lexicon_k.value)?;
    let sentences: Vec<Vec<String>> = text
        .lines()
        .map(pausecut::tokenize)
        .filter(|t| !t.is_empty())
        .collect();
    if sentences.is_empty() {
        return Err(UsageError("input text is empty".into()).into());
    }
    let result: Vec<Vec<String>> = sentences
        .iter()
        .map(|toks| {
            segment_text(toks, &lex, ctx.cfg.min_words.value, !args.no_punctuation)
                .into_iter()
                .map(|s| s.join(" "))
                .collect()
        })
        .collect();
    ctx.sink.emit(&result, |out| {
        for (i, segs) in result.iter().enumerate() {
            if i > 0 {
                writeln!(out)?;
            }
            for s in segs {
                writeln!(out, "{s}")?;
            }
        }
        Ok(())
    })?;
    Ok(Outcome::Complete)
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub input: TextInput,
    /// Break lexicon saved by `lexicon --save`; without one only punctuation splits.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Output WAV file.
    #[arg(long)]
    pub wav: PathBuf,
    /// Use the built-in deterministic tone generator instead of a server.
    #[arg(long)]
    pub mock: bool,
    /// Synthesize the whole text in one request (sentence-level baseline).
    #[arg(long)]
    pub sentence_level: bool,
    /// Voice name forwarded to the server.
    #[arg(long)]
    pub voice: Option<String>,
}

#[derive(Serialize)]
struct SynthReport {
    wav: PathBuf,
    sample_rate: u32,
    n_samples: usize,
    duration: f64,
    gap: f64,
    segments: Vec<SegmentTrace>,
}

pub fn synth(ctx: &Ctx, args: SynthArgs) -> anyhow::Result<Outcome> {
    let text = args.input.read()?;
    let tokens = pausecut::tokenize(&text);
    if tokens.is_empty() {
        return Err(UsageError("input text is empty".into()).into());
    }
    let cfg = &ctx.cfg;
    let http;
    let backend: &dyn SynthBackend = if args.mock {
        &MockBackend
    } else {
        let Some(endpoint) = cfg.endpoint.value.clone() else {
            return Err(UsageError("no synthesis backend: pass --endpoint, set PAUSECUT_ENDPOINT, or use --mock".into()).into());
        };
        http = HttpBackend::new(endpoint, Duration::from_secs_f64(cfg.timeout.value), cfg.sample_rate.value)
            .with_max_concurrency(cfg.jobs.value);
        &http
    };
    let voice = args.voice.clone().or_else(|| cfg.voice.value.clone());
    let (clip, trace) = if args.sentence_level {
        synthesize_sentence(backend, &tokens, voice)?
    } else {
        let lex = load_lexicon(args.lexicon.as_deref(), cfg.lexicon_k.value)?;
        let opts = LongSynthOptions {
            min_words: cfg.min_words.value,
            gap: cfg.gap.value,
            concurrency: cfg.jobs.value,
            voice,
        };
        synthesize_long(backend, &tokens, &lex, &opts)?
    };
    let bytes = wav_bytes(&clip)?;
    fs::write(&args.wav, bytes).with_context(|| format!("writing {}", args.wav.display()))?;
    let report = SynthReport {
        wav: args.wav.clone(),
        sample_rate: clip.sample_rate,
        n_samples: clip.len(),
        duration: clip.duration(),
        gap: if args.sentence_level { 0.0 } else { cfg.gap.value },
        segments: trace,
    };
    ctx.sink.emit(&report, |out| {
        let rows: Vec<Vec<String>> = report
            .segments
            .iter()
            .map(|s| {
                vec![
                    (s.index + 1).to_string(),
                    format!("{:.3}", s.start),
                    format!("{:.3}", s.duration),
                    s.text.clone(),
                ]
            })
            .collect();
        table(out, &["#".into(), "start".into(), "dur".into(), "text".into()], &rows)?;
        writeln!(out, "{}: {:.3} s at {} Hz", report.wav.display(), report.duration, report.sample_rate)
    })?;
    Ok(Outcome::Complete)
}
