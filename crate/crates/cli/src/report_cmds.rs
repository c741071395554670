use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Subcommand};
use pausecut::audio::{detect_silences_energy, estimate_f0, read_wav, F0Params, SilenceParams};
use pausecut::audit::{audit_transcript, eou_audit, error_table, parse_trace, EouStatus};
use pausecut::ipu::Histogram;
use pausecut::stats::{
    duration_summary, fit_gamma, ngram_loglik, ngram_train, pc_tally, relative_reduction, PC_TEST,
    QUARTILE_METHOD,
};
use pausecut::{AudioClip, DurationSummary, ErrorCounts, Manifest};
use serde::Serialize;

use crate::corpus_cmds::read_any_manifest;
use crate::output::table;
use crate::{Ctx, Outcome, UsageError};

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Box-plot summary and histogram of record durations in a manifest.
    Durations {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Maximum-likelihood Gamma fit to manifest durations or a file of numbers.
    Gamma {
        #[arg(long, conflicts_with = "values", required_unless_present = "values")]
        manifest: Option<PathBuf>,
        /// Whitespace-separated positive numbers.
        #[arg(long)]
        values: Option<PathBuf>,
    },
    /// Mean relative reduction of paired measurements, e.g. training hours.
    Reduction {
        /// `BASELINE:TREATMENT` pairs.
        #[arg(required = true, value_name = "BASE:TREAT")]
        pairs: Vec<Pair>,
    },
    /// Pairwise-comparison preference tally with an exact sign test.
    Pc {
        #[arg(long)]
        prefer_a: u64,
        #[arg(long)]
        prefer_b: u64,
        #[arg(long, default_value_t = 0)]
        equal: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Train an add-one n-gram model and score sentences with it.
    Lm {
        /// Training text, one sentence per line.
        #[arg(long)]
        train: PathBuf,
        /// Sentences to score, one per line.
        #[arg(long)]
        score: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct Pair(f64, f64);

impl FromStr for Pair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected BASE:TREAT, got {s:?}"))?;
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("not a number: {x:?}"));
        Ok(Pair(num(a)?, num(b)?))
    }
}

fn durations_of(m: &Manifest) -> Vec<f64> {
    match m {
        Manifest::Sentence(v) => v.iter().map(|u| u.duration).collect(),
        Manifest::Ipu(v) => v.iter().map(|r| r.duration()).collect(),
    }
}

fn summary_row(name: &str, s: &DurationSummary) -> Vec<String> {
    let mut row = vec![name.to_owned(), s.n.to_string()];
    row.extend([s.mean, s.std, s.min, s.q1, s.median, s.q3, s.max].map(|x| format!("{x:.2}")));
    row
}

fn summary_header() -> Vec<String> {
    ["Durations (s)", "n", "mean", "std", "min", "q1", "median", "q3", "max"]
        .map(String::from)
        .to_vec()
}

fn read_lines(path: &Path) -> anyhow::Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(pausecut::tokenize).filter(|t| !t.is_empty()).collect())
}

pub fn stats(ctx: &Ctx, cmd: StatsCommand) -> anyhow::Result<Outcome> {
    match cmd {
        StatsCommand::Durations { manifest } => {
            let m = read_any_manifest(&manifest)?;
            let d = durations_of(&m);
            let summary = duration_summary(&d)?;
            let mut hist = Histogram::durations();
            d.iter().for_each(|&x| hist.add(x));
            #[derive(Serialize)]
            struct Report<'a> {
                kind: String,
                quartile_method: &'a str,
                summary: DurationSummary,
                histogram: Histogram,
            }
            let report = Report {
                kind: m.kind().to_string(),
                quartile_method: QUARTILE_METHOD,
                summary,
                histogram: hist,
            };
            ctx.sink.emit(&report, |out| {
                table(out, &summary_header(), &[summary_row(&report.kind, &summary)])?;
                writeln!(out, "quartiles: {QUARTILE_METHOD}")
            })?;
        }
        StatsCommand::Gamma { manifest, values } => {
            let xs = match (manifest, values) {
                (Some(m), _) => durations_of(&read_any_manifest(&m)?),
                (None, Some(v)) => {
                    let text = fs::read_to_string(&v).with_context(|| format!("reading {}", v.display()))?;
                    text.split_whitespace()
                        .map(|t| t.parse::<f64>().map_err(|_| anyhow!("{}: not a number: {t:?}", v.display())))
                        .collect::<anyhow::Result<_>>()?
                }
                (None, None) => unreachable!("clap requires one source"),
            };
            let fit = fit_gamma(&xs)?;
            ctx.sink.emit(&fit, |out| {
                writeln!(
                    out,
                    "Gamma fit over {} values: shape k = {:.4}, scale theta = {:.4}, log-likelihood = {:.3}",
                    xs.len(),
                    fit.shape,
                    fit.scale,
                    fit.log_likelihood
                )
            })?;
        }
        StatsCommand::Reduction { pairs } => {
            let raw: Vec<(f64, f64)> = pairs.iter().map(|p| (p.0, p.1)).collect();
            let r = relative_reduction(&raw).map_err(|e| UsageError(e.to_string()))?;
            let value = serde_json::json!({ "pairs": raw, "reduction_percent": r });
            ctx.sink.emit(&value, |out| {
                let mut rows: Vec<Vec<String>> = raw
                    .iter()
                    .map(|(a, b)| vec![format!("{a:.2}"), format!("{b:.2}"), format!("{:.2}", 100.0 * (a - b) / a)])
                    .collect();
                rows.push(vec!["".into(), "mean".into(), format!("{r:.2}")]);
                table(out, &["Baseline".into(), "Treatment".into(), "Reduction %".into()], &rows)
            })?;
        }
        StatsCommand::Pc { prefer_a, prefer_b, equal, alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(UsageError(format!("alpha must lie in (0, 1), got {alpha}")).into());
            }
            let r = pc_tally(prefer_a, prefer_b, equal).map_err(|e| UsageError(e.to_string()))?;
            let value = serde_json::json!({
                "result": r,
                "test": PC_TEST,
                "alpha": alpha,
                "significant": r.significant(alpha),
            });
            ctx.sink.emit(&value, |out| {
                table(
                    out,
                    &["Prefer A %".into(), "Prefer B %".into(), "Equal %".into(), "p".into()],
                    &[vec![
                        format!("{:.2}", r.percent_a),
                        format!("{:.2}", r.percent_b),
                        format!("{:.2}", r.percent_equal),
                        format!("{:.4}", r.p_value),
                    ]],
                )?;
                let verdict = if r.significant(alpha) { "significant" } else { "not significant" };
                writeln!(out, "{verdict} at alpha = {alpha} ({PC_TEST})")
            })?;
        }
        StatsCommand::Lm { train, score, order } => {
            let model = ngram_train(&read_lines(&train)?, order).map_err(|e| UsageError(e.to_string()))?;
            let sentences = read_lines(&score)?;
            if sentences.is_empty() {
                bail!("{} has no sentences", score.display());
            }
            let scores: Vec<f64> = sentences.iter().map(|s| ngram_loglik(&model, s)).collect();
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            let value = serde_json::json!({
                "order": order,
                "smoothing": "add-one (Laplace)",
                "vocab_size": model.vocab_size(),
                "log_likelihoods": scores,
                "mean_log_likelihood": mean,
            });
            ctx.sink.emit(&value, |out| {
                for (s, ll) in sentences.iter().zip(&scores) {
                    writeln!(out, "{ll:10.3}  {}", s.join(" "))?;
                }
                writeln!(out, "mean log-likelihood (natural log) over {} sentences: {mean:.3}", scores.len())
            })?;
        }
    }
    Ok(Outcome::Complete)
}

#[derive(Debug, Subcommand)]
pub enum AuditCommand {
    /// Count repetitions, skips, other insertions and substitutions per group.
    Transcripts {
        /// Reference text: `id token token ...` per line.
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Transcript of the synthesized audio, same format.
        #[arg(long)]
        hyp: PathBuf,
        /// Optional `id group` lines; one table column per group.
        #[arg(long)]
        groups: Option<PathBuf>,
        /// System name shown in the report.
        #[arg(long, default_value = "system")]
        system: String,
    },
    /// Locate the end-of-utterance decision in a stop-probability trace.
    Eou {
        /// JSON array or one probability per line.
        #[arg(long)]
        trace: PathBuf,
        /// Frame where the utterance should end.
        #[arg(long)]
        expected: usize,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Frames of slack counted as on time.
        #[arg(long, default_value_t = 10)]
        tolerance: usize,
    },
}

fn read_id_text(path: &Path) -> anyhow::Result<Vec<(String, Vec<String>)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let mut toks = pausecut::tokenize(line).into_iter();
        if let Some(id) = toks.next() {
            out.push((id, toks.collect()));
        }
    }
    Ok(out)
}

pub fn audit(ctx: &Ctx, cmd: AuditCommand) -> anyhow::Result<Outcome> {
    match cmd {
        AuditCommand::Transcripts {
            reference,
            hyp,
            groups,
            system,
        } => {
            let refs = read_id_text(&reference)?;
            let hyps: HashMap<String, Vec<String>> = read_id_text(&hyp)?.into_iter().collect();
            let group_of: HashMap<String, String> = match &groups {
                Some(p) => read_id_text(p)?
                    .into_iter()
                    .filter_map(|(id, g)| g.first().map(|g| (id, g.clone())))
                    .collect(),
                None => HashMap::new(),
            };
            let mut per_group: BTreeMap<String, ErrorCounts> = BTreeMap::new();
            let mut missing = Vec::new();
            for (id, r) in &refs {
                let Some(h) = hyps.get(id) else {
                    missing.push(id.clone());
                    continue;
                };
                let g = group_of.get(id).cloned().unwrap_or_else(|| "all".into());
                *per_group.entry(g).or_default() += audit_transcript(r, h);
            }
            for id in &missing {
                eprintln!("warning: {id}: no hypothesis transcript, skipped");
            }
            let cols: Vec<(String, ErrorCounts)> = per_group.into_iter().collect();
            let t = error_table(&system, &cols).map_err(|e| anyhow!("{e}: no reference matched a hypothesis"))?;
            ctx.sink.emit(&t, |out| {
                let mut header = vec![format!("{} / Error type", t.system)];
                header.extend(t.columns.iter().cloned());
                let rows: Vec<Vec<String>> = t
                    .rows
                    .iter()
                    .map(|r| {
                        let mut row = vec![r.error_type.to_string()];
                        row.extend(r.values.iter().map(u64::to_string));
                        row
                    })
                    .collect();
                table(out, &header, &rows)?;
                let rt = &t.rates;
                writeln!(
                    out,
                    "rates: repetitions {:.2}%, skips {:.2}%, other insertions {:.2}%, substitutions {:.2}%, incorrect end-of-utterance {:.2}%",
                    rt.repetitions, rt.skips, rt.other_insertions, rt.substitutions, rt.incorrect_eou
                )
            })?;
            if !missing.is_empty() {
                return Ok(Outcome::Partial);
            }
        }
        AuditCommand::Eou {
            trace,
            expected,
            threshold,
            tolerance,
        } => {
            let text = fs::read_to_string(&trace).with_context(|| format!("reading {}", trace.display()))?;
            let probs = parse_trace(&text).map_err(|e| anyhow!("{}: {e}", trace.display()))?;
            if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                bail!("{}: probability {p} outside [0, 1]", trace.display());
            }
            let v = eou_audit(&probs, expected, threshold, tolerance).map_err(|e| UsageError(e.to_string()))?;
            ctx.sink.emit(&v, |out| match (v.status, v.crossing_frame) {
                (EouStatus::OnTime, Some(c)) => writeln!(out, "on time: crossed at frame {c} (expected {expected})"),
                (EouStatus::Early(d), Some(c)) => {
                    writeln!(out, "early by {d} frames: crossed at frame {c} (expected {expected}), words likely skipped")
                }
                (EouStatus::Late(d), Some(c)) => {
                    writeln!(out, "late by {d} frames: crossed at frame {c} (expected {expected}), words likely repeated")
                }
                _ => writeln!(out, "no end-of-utterance: probability never reached {threshold}"),
            })?;
        }
    }
    Ok(Outcome::Complete)
}

fn load_wav(path: &Path) -> anyhow::Result<AudioClip> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_wav(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

#[derive(Debug, Args)]
pub struct SilencesArgs {
    #[arg(long)]
    pub wav: PathBuf,
    /// Frames below this RMS level (dBFS) are silent.
    #[arg(long, default_value_t = -40.0, allow_negative_numbers = true)]
    pub threshold_db: f64,
    /// Drop silent runs shorter than this (s).
    #[arg(long, default_value_t = 0.0)]
    pub min_dur: f64,
}

pub fn silences(ctx: &Ctx, args: SilencesArgs) -> anyhow::Result<Outcome> {
    let clip = load_wav(&args.wav)?;
    let params = SilenceParams {
        threshold_db: args.threshold_db,
        min_dur: args.min_dur,
        ..SilenceParams::default()
    };
    let runs = detect_silences_energy(&clip, &params).map_err(|e| UsageError(e.to_string()))?;
    ctx.sink.emit(&runs, |out| {
        for (a, b) in &runs {
            writeln!(out, "{a:.3}\t{b:.3}\t{:.3}", b - a)?;
        }
        Ok(())
    })?;
    Ok(Outcome::Complete)
}

#[derive(Debug, Args)]
pub struct F0Args {
    #[arg(long)]
    pub wav: PathBuf,
    #[arg(long, default_value_t = 60.0)]
    pub f0_min: f64,
    #[arg(long, default_value_t = 400.0)]
    pub f0_max: f64,
    /// Include the per-frame track in JSON output.
    #[arg(long)]
    pub track: bool,
}

pub fn f0(ctx: &Ctx, args: F0Args) -> anyhow::Result<Outcome> {
    let clip = load_wav(&args.wav)?;
    let params = F0Params {
        f0_min: args.f0_min,
        f0_max: args.f0_max,
        frame: F0Params::default().frame.max(2.0 / args.f0_min),
        ..F0Params::default()
    };
    let (track, summary) = estimate_f0(&clip, &params).map_err(|e| UsageError(e.to_string()))?;
    let value = if args.track {
        serde_json::json!({ "summary": summary, "track": track })
    } else {
        serde_json::json!({ "summary": summary })
    };
    ctx.sink.emit(&value, |out| match summary {
        pausecut::F0Summary::Defined { voiced_frames, mean, std } => {
            writeln!(out, "mean F0 {mean:.1} Hz, std {std:.1} Hz over {voiced_frames} voiced frames")
        }
        pausecut::F0Summary::Undefined => writeln!(out, "no voiced frames"),
    })?;
    Ok(Outcome::Complete)
}
