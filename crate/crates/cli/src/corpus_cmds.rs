use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use pausecut::align::{parse_lab, parse_textgrid};
use pausecut::audio::{read_wav, write_wav};
use pausecut::corpus::{read_manifest, read_manifest_as, split_train_val, write_manifest};
use pausecut::ipu::{extract_corpus, Failure};
use pausecut::{AlignmentTrack, Manifest, ManifestKind, TimeUnit};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::table;
use crate::{Ctx, Outcome, UsageError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignFormat {
    /// Pick by file extension, preferring TextGrid.
    Auto,
    Lab,
    Textgrid,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Sentence manifest (JSON Lines). Relative audio paths resolve against its directory.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory holding `<id>.TextGrid` or `<id>.lab` per utterance.
    #[arg(long)]
    pub align_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = AlignFormat::Auto)]
    pub align_format: AlignFormat,
    /// Interval tier to read from TextGrid files.
    #[arg(long, default_value = "words")]
    pub tier: String,
    /// Time unit of `.lab` files: `seconds` or `htk` (100 ns ticks).
    #[arg(long, default_value = "seconds")]
    pub time_unit: TimeUnit,
    /// Comma-separated labels treated as pauses (default: sp,sil,pau and empty).
    #[arg(long, value_delimiter = ',')]
    pub pause_labels: Option<Vec<String>>,
    /// Output directory for `ipu_manifest.jsonl`, `report.json` and `wav/`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_owned()
    } else {
        base.join(p)
    }
}

fn read_sentence_manifest(path: &Path) -> anyhow::Result<Manifest> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_manifest_as(BufReader::new(f), ManifestKind::Sentence)
        .with_context(|| format!("reading {}", path.display()))
}

pub fn read_any_manifest(path: &Path) -> anyhow::Result<Manifest> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_manifest(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn find_alignment(dir: &Path, id: &str, format: AlignFormat) -> Option<(PathBuf, AlignFormat)> {
    let tg = [format!("{id}.TextGrid"), format!("{id}.textgrid")];
    let lab = [format!("{id}.lab")];
    let candidates: Vec<(&String, AlignFormat)> = match format {
        AlignFormat::Textgrid => tg.iter().map(|n| (n, AlignFormat::Textgrid)).collect(),
        AlignFormat::Lab => lab.iter().map(|n| (n, AlignFormat::Lab)).collect(),
        AlignFormat::Auto => tg
            .iter()
            .map(|n| (n, AlignFormat::Textgrid))
            .chain(lab.iter().map(|n| (n, AlignFormat::Lab)))
            .collect(),
    };
    candidates
        .into_iter()
        .map(|(name, f)| (dir.join(name), f))
        .find(|(p, _)| p.is_file())
}

fn load_alignment(path: &Path, format: AlignFormat, args: &ExtractArgs) -> Result<AlignmentTrack, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let track = match format {
        AlignFormat::Lab => parse_lab(&bytes, args.time_unit),
        _ => parse_textgrid(&bytes, &args.tier),
    }
    .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(match &args.pause_labels {
        Some(labels) => track.with_pause_labels(labels.iter().map(|l| l.trim().to_owned())),
        None => track,
    })
}

pub fn extract(ctx: &Ctx, args: ExtractArgs) -> anyhow::Result<Outcome> {
    let manifest = read_sentence_manifest(&args.manifest)?;
    let Manifest::Sentence(utts) = &manifest else {
        unreachable!("read as a sentence manifest")
    };
    let base = args.manifest.parent().unwrap_or(Path::new(".")).to_owned();
    if !args.align_dir.is_dir() {
        return Err(UsageError(format!("alignment directory {} not found", args.align_dir.display())).into());
    }

    let loaded: Vec<(String, Option<Result<AlignmentTrack, String>>)> = utts
        .par_iter()
        .map(|u| {
            let found = find_alignment(&args.align_dir, &u.id, args.align_format);
            (u.id.clone(), found.map(|(p, f)| load_alignment(&p, f, &args)))
        })
        .collect();
    let mut aligns = HashMap::new();
    let mut unreadable = HashMap::new();
    for (id, r) in loaded {
        match r {
            Some(Ok(t)) => {
                aligns.insert(id, t);
            }
            Some(Err(reason)) => {
                unreadable.insert(id, reason);
            }
            None => {}
        }
    }

    let wav_dir = args.out_dir.join("wav");
    fs::create_dir_all(&wav_dir).with_context(|| format!("creating {}", wav_dir.display()))?;
    let cfg = ctx.cfg.extract_config();
    let (ipus, mut report) = extract_corpus(
        &manifest,
        &aligns,
        &cfg,
        |u| {
            let path = resolve(&base, &u.audio_path);
            let f = File::open(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            read_wav(BufReader::new(f)).map_err(|e| format!("{}: {e}", path.display()))
        },
        |rec, clip| {
            let rel = format!("wav/{}.wav", rec.id());
            let path = args.out_dir.join(&rel);
            let f = File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            write_wav(clip, BufWriter::new(f)).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(rel)
        },
    )?;
    // Alignment files that exist but do not parse are failures, not missing alignments.
    report.missing_alignments.retain(|id| {
        let Some(reason) = unreadable.remove(id) else {
            return true;
        };
        report.failures.push(Failure {
            id: id.clone(),
            reason,
        });
        false
    });

    let manifest_path = args.out_dir.join("ipu_manifest.jsonl");
    let f = File::create(&manifest_path).with_context(|| format!("creating {}", manifest_path.display()))?;
    write_manifest(&ipus, BufWriter::new(f))?;
    crate::output::write_json(&args.out_dir.join("report.json"), &report)?;

    for id in &report.missing_alignments {
        eprintln!("warning: {id}: no alignment found, skipped");
    }
    for f in &report.failures {
        eprintln!("warning: {}: {}, skipped", f.id, f.reason);
    }
    ctx.sink.emit(&report, |out| {
        writeln!(
            out,
            "{} of {} utterances -> {} IPUs ({} boundaries, {} short pauses eliminated)",
            report.n_processed, report.n_utterances, report.n_ipus, report.n_boundaries, report.n_eliminated_pauses
        )?;
        writeln!(out, "manifest: {}", manifest_path.display())?;
        let header = ["Durations (s)", "n", "mean", "std", "min", "q1", "median", "q3", "max"]
            .map(String::from)
            .to_vec();
        let mut rows = Vec::new();
        for (name, s) in [("sentence", report.sentence_durations), ("IPU", report.ipu_durations)] {
            if let Some(s) = s {
                let mut row = vec![name.to_string(), s.n.to_string()];
                row.extend([s.mean, s.std, s.min, s.q1, s.median, s.q3, s.max].map(|x| format!("{x:.2}")));
                rows.push(row);
            }
        }
        if !rows.is_empty() {
            table(out, &header, &rows)?;
        }
        Ok(())
    })?;
    Ok(if report.is_complete() {
        Outcome::Complete
    } else {
        Outcome::Partial
    })
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory receiving `train.jsonl` and `val.jsonl`.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Fraction of records for training (overrides `train_fraction` in the config).
    #[arg(long)]
    pub train_fraction: Option<f64>,
}

#[derive(Serialize)]
struct SplitSummary {
    seed: u64,
    train_fraction: f64,
    n_train: usize,
    n_val: usize,
    train: PathBuf,
    val: PathBuf,
}

pub fn split(ctx: &Ctx, args: SplitArgs) -> anyhow::Result<Outcome> {
    let manifest = read_any_manifest(&args.manifest)?;
    let fraction = args.train_fraction.unwrap_or(ctx.cfg.train_fraction.value);
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(UsageError(format!("train fraction must lie in (0, 1], got {fraction}")).into());
    }
    let seed = ctx.cfg.seed.value;
    let (train, val) = split_train_val(&manifest, fraction, seed)?;
    fs::create_dir_all(&args.out_dir)?;
    let summary = SplitSummary {
        seed,
        train_fraction: fraction,
        n_train: train.len(),
        n_val: val.len(),
        train: args.out_dir.join("train.jsonl"),
        val: args.out_dir.join("val.jsonl"),
    };
    for (m, path) in [(&train, &summary.train), (&val, &summary.val)] {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        if m.is_empty() {
            // An empty split is still a valid (empty) manifest file.
            drop(f);
            continue;
        }
        write_manifest(m, BufWriter::new(f))?;
    }
    ctx.sink.emit(&summary, |out| {
        writeln!(
            out,
            "train: {} records -> {}\nval:   {} records -> {}",
            summary.n_train,
            summary.train.display(),
            summary.n_val,
            summary.val.display()
        )
    })?;
    Ok(Outcome::Complete)
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// File receiving `id audio_path` lines.
    #[arg(long)]
    pub audio_map: PathBuf,
    /// File receiving `id token token ...` lines.
    #[arg(long)]
    pub text_map: PathBuf,
}

pub fn export_maps(ctx: &Ctx, args: ExportArgs) -> anyhow::Result<Outcome> {
    let manifest = read_any_manifest(&args.manifest)?;
    if manifest.is_empty() {
        bail!("{} has no records", args.manifest.display());
    }
    let audio = BufWriter::new(File::create(&args.audio_map)?);
    let text = BufWriter::new(File::create(&args.text_map)?);
    pausecut::corpus::export_maps(&manifest, audio, text)?;
    let n = manifest.len();
    ctx.sink.emit(&serde_json::json!({ "records": n }), |out| {
        writeln!(out, "wrote {n} entries to {} and {}", args.audio_map.display(), args.text_map.display())
    })?;
    Ok(Outcome::Complete)
}
