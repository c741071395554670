//! Run configuration: built-in defaults, overridden by a TOML file, overridden by flags.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use anyhow::Context;
use clap::Args;
use pausecut::ipu::ExtractConfig;
use pausecut::SplitPoint;
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Flags shared by every subcommand. Each one overrides the same key in `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// TOML file with any of the keys printed by --show-config.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<std::path::PathBuf>,
    /// Print the merged configuration with the source of each value, then exit.
    #[arg(long, global = true)]
    pub show_config: bool,
    /// Minimum pause (s) that splits an utterance into IPUs.
    #[arg(long, global = true, value_name = "SECONDS")]
    pub t_sil: Option<f64>,
    /// Pauses shorter than this (s) are treated as speech-internal.
    #[arg(long, global = true, value_name = "SECONDS")]
    pub min_sp: Option<f64>,
    /// Cut position inside a boundary pause: `midpoint` or `trim:PAD`.
    #[arg(long, global = true, value_name = "MODE")]
    pub split_point: Option<SplitPoint>,
    /// Minimum words per synthesis unit; shorter units merge with their neighbour.
    #[arg(long, global = true, value_name = "N")]
    pub min_words: Option<usize>,
    /// Minimum words per extracted IPU (merge disabled unless set).
    #[arg(long, global = true, value_name = "N")]
    pub min_ipu_words: Option<usize>,
    /// Number of active break-lexicon entries.
    #[arg(long, global = true, value_name = "K")]
    pub lexicon_k: Option<usize>,
    /// Silence (s) inserted between synthesized units.
    #[arg(long, global = true, value_name = "SECONDS", conflicts_with = "no_gap")]
    pub gap: Option<f64>,
    /// Join synthesized units without any inserted silence.
    #[arg(long, global = true)]
    pub no_gap: bool,
    /// Synthesis server base URL.
    #[arg(long, global = true, env = "PAUSECUT_ENDPOINT", value_name = "URL")]
    pub endpoint: Option<String>,
    /// Per-request timeout (s) for the synthesis server.
    #[arg(long, global = true, value_name = "SECONDS")]
    pub timeout: Option<f64>,
    /// Seed for the train/validation shuffle.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-utterance work and concurrent synthesis requests.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
}

/// Keys accepted in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    t_sil: Option<f64>,
    min_sp: Option<f64>,
    split_point: Option<String>,
    min_words: Option<usize>,
    min_ipu_words: Option<usize>,
    lexicon_k: Option<usize>,
    gap: Option<f64>,
    endpoint: Option<String>,
    timeout: Option<f64>,
    seed: Option<u64>,
    jobs: Option<usize>,
    voice: Option<String>,
    sample_rate: Option<u32>,
    tolerance: Option<f64>,
    train_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Default,
    Config,
    Flag,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sourced<T> {
    pub value: T,
    pub source: Source,
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> Sourced<T> {
    match (flag, file) {
        (Some(value), _) => Sourced { value, source: Source::Flag },
        (None, Some(value)) => Sourced { value, source: Source::Config },
        (None, None) => Sourced { value: default, source: Source::Default },
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub t_sil: Sourced<f64>,
    pub min_sp: Sourced<f64>,
    pub split_point: Sourced<SplitPoint>,
    pub min_words: Sourced<usize>,
    pub min_ipu_words: Sourced<Option<usize>>,
    pub lexicon_k: Sourced<usize>,
    pub gap: Sourced<f64>,
    pub endpoint: Sourced<Option<String>>,
    pub timeout: Sourced<f64>,
    pub seed: Sourced<u64>,
    pub jobs: Sourced<usize>,
    pub voice: Sourced<Option<String>>,
    pub sample_rate: Sourced<u32>,
    pub tolerance: Sourced<f64>,
    pub train_fraction: Sourced<f64>,
}

pub const DEFAULT_SEED: u64 = 1234;
pub const DEFAULT_TIMEOUT: f64 = 30.0;
pub const DEFAULT_SAMPLE_RATE: u32 = 22050;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.9;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

impl RunConfig {
    pub fn resolve(flags: &ConfigFlags) -> anyhow::Result<RunConfig> {
        let file = match &flags.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let file_split = file
            .split_point
            .as_deref()
            .map(SplitPoint::from_str)
            .transpose()
            .map_err(|e| usage(format!("config split_point: {e}")))?;
        let extract_defaults = ExtractConfig::default();
        let default_jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
        let flag_gap = if flags.no_gap { Some(0.0) } else { flags.gap };
        let flag_min_ipu = flags.min_ipu_words.map(Some);
        let cfg = RunConfig {
            t_sil: pick(flags.t_sil, file.t_sil, extract_defaults.t_sil),
            min_sp: pick(flags.min_sp, file.min_sp, extract_defaults.min_sp),
            split_point: pick(flags.split_point, file_split, extract_defaults.split_point),
            min_words: pick(flags.min_words, file.min_words, pausecut::phrase::DEFAULT_MIN_WORDS),
            min_ipu_words: pick(flag_min_ipu, file.min_ipu_words.map(Some), None),
            lexicon_k: pick(flags.lexicon_k, file.lexicon_k, pausecut::phrase::DEFAULT_LEXICON_K),
            gap: pick(flag_gap, file.gap, pausecut::synth::DEFAULT_GAP),
            endpoint: pick(flags.endpoint.clone().map(Some), file.endpoint.map(Some), None),
            timeout: pick(flags.timeout, file.timeout, DEFAULT_TIMEOUT),
            seed: pick(flags.seed, file.seed, DEFAULT_SEED),
            jobs: pick(flags.jobs, file.jobs, default_jobs),
            voice: pick(None, file.voice.map(Some), None),
            sample_rate: pick(None, file.sample_rate, DEFAULT_SAMPLE_RATE),
            tolerance: pick(None, file.tolerance, extract_defaults.tolerance),
            train_fraction: pick(None, file.train_fraction, DEFAULT_TRAIN_FRACTION),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> anyhow::Result<()> {
        self.extract_config().validate().map_err(|e| usage(e.to_string()))?;
        if self.min_words.value == 0 {
            return Err(usage("min_words must be at least 1"));
        }
        if self.lexicon_k.value == 0 {
            return Err(usage("lexicon_k must be at least 1"));
        }
        if !(self.gap.value >= 0.0 && self.gap.value.is_finite()) {
            return Err(usage(format!("gap must be >= 0, got {}", self.gap.value)));
        }
        if !(self.timeout.value > 0.0 && self.timeout.value.is_finite()) {
            return Err(usage(format!("timeout must be positive, got {}", self.timeout.value)));
        }
        if self.jobs.value == 0 {
            return Err(usage("jobs must be at least 1"));
        }
        if self.sample_rate.value == 0 {
            return Err(usage("sample_rate must be positive"));
        }
        let f = self.train_fraction.value;
        if !(f > 0.0 && f <= 1.0) {
            return Err(usage(format!("train_fraction must lie in (0, 1], got {f}")));
        }
        Ok(())
    }

    pub fn extract_config(&self) -> ExtractConfig {
        ExtractConfig {
            t_sil: self.t_sil.value,
            min_sp: self.min_sp.value,
            split_point: self.split_point.value,
            min_ipu_words: self.min_ipu_words.value,
            tolerance: self.tolerance.value,
        }
    }

    /// TOML rendering that can be fed back through `--config`, annotated with sources.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let mut line = |key: &str, value: Option<String>, source: Source| {
            let source = match source {
                Source::Default => "default",
                Source::Config => "config file",
                Source::Flag => "flag",
            };
            let _ = match value {
                Some(v) => writeln!(out, "{key} = {v}  # {source}"),
                None => writeln!(out, "# {key} is unset  ({source})"),
            };
        };
        let quote = |s: &str| toml::Value::String(s.to_owned()).to_string();
        let float = |x: f64| toml::Value::Float(x).to_string();
        line("t_sil", Some(float(self.t_sil.value)), self.t_sil.source);
        line("min_sp", Some(float(self.min_sp.value)), self.min_sp.source);
        line("split_point", Some(quote(&self.split_point.value.to_string())), self.split_point.source);
        line("min_words", Some(self.min_words.value.to_string()), self.min_words.source);
        line("min_ipu_words", self.min_ipu_words.value.map(|v| v.to_string()), self.min_ipu_words.source);
        line("lexicon_k", Some(self.lexicon_k.value.to_string()), self.lexicon_k.source);
        line("gap", Some(float(self.gap.value)), self.gap.source);
        line("endpoint", self.endpoint.value.as_deref().map(quote), self.endpoint.source);
        line("timeout", Some(float(self.timeout.value)), self.timeout.source);
        line("seed", Some(self.seed.value.to_string()), self.seed.source);
        line("jobs", Some(self.jobs.value.to_string()), self.jobs.source);
        line("voice", self.voice.value.as_deref().map(quote), self.voice.source);
        line("sample_rate", Some(self.sample_rate.value.to_string()), self.sample_rate.source);
        line("tolerance", Some(float(self.tolerance.value)), self.tolerance.source);
        line("train_fraction", Some(float(self.train_fraction.value)), self.train_fraction.source);
        out
    }
}

fn read_file(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(|e| usage(format!("{e:#}")))?;
    toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let f = write_config("t_sil = 0.2\nmin_sp = 0.03\nseed = 9\n");
        let flags = ConfigFlags {
            config: Some(f.path().to_owned()),
            t_sil: Some(0.3),
            ..ConfigFlags::default()
        };
        let cfg = RunConfig::resolve(&flags).unwrap();
        assert_eq!((cfg.t_sil.value, cfg.t_sil.source), (0.3, Source::Flag));
        assert_eq!((cfg.min_sp.value, cfg.min_sp.source), (0.03, Source::Config));
        assert_eq!((cfg.gap.value, cfg.gap.source), (0.1, Source::Default));
        assert_eq!(cfg.seed.value, 9);
    }

    #[test]
    fn rendered_config_reads_back() {
        let flags = ConfigFlags {
            split_point: Some(SplitPoint::TrimToPad { pad: 0.05 }),
            no_gap: true,
            endpoint: Some("http://localhost:5000".into()),
            jobs: Some(3),
            ..ConfigFlags::default()
        };
        let cfg = RunConfig::resolve(&flags).unwrap();
        let f = write_config(&cfg.to_toml());
        let again = RunConfig::resolve(&ConfigFlags {
            config: Some(f.path().to_owned()),
            ..ConfigFlags::default()
        })
        .unwrap();
        assert_eq!(again.split_point.value, SplitPoint::TrimToPad { pad: 0.05 });
        assert_eq!(again.gap.value, 0.0);
        assert_eq!(again.endpoint.value.as_deref(), Some("http://localhost:5000"));
        assert_eq!(again.jobs.value, 3);
        assert_eq!(again.gap.source, Source::Config);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        for text in ["t_sil = -1.0", "colour = 1", "split_point = \"edge\"", "t_sil = \"x\""] {
            let f = write_config(text);
            let err = RunConfig::resolve(&ConfigFlags {
                config: Some(f.path().to_owned()),
                ..ConfigFlags::default()
            })
            .unwrap_err();
            assert!(err.downcast_ref::<UsageError>().is_some(), "{text}: {err}");
        }
        let err = RunConfig::resolve(&ConfigFlags {
            min_words: Some(0),
            ..ConfigFlags::default()
        })
        .unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }
}
