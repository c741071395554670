mod config;
mod corpus_cmds;
mod output;
mod report_cmds;
mod text_cmds;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigFlags, RunConfig};
use output::Sink;

/// A configuration or invocation problem; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// How a command that ran to the end went.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    /// Some inputs were skipped; the rest were processed.
    Partial,
}

#[derive(Debug, Parser)]
#[command(
    name = "pausecut",
    version,
    about = "Split aligned speech corpora into inter-pausal units and synthesize long text unit by unit",
    after_help = "Settings resolve as: flag, then --config file, then built-in default.\n\
                  Exit status: 0 success, 1 partial failure or runtime error, 2 usage or config error."
)]
struct Cli {
    #[command(flatten)]
    flags: ConfigFlags,
    /// Write the result as JSON to FILE, or to stdout with `-`.
    #[arg(long, short, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cut a sentence manifest into IPU clips using word alignments.
    Extract(corpus_cmds::ExtractArgs),
    /// Seeded train/validation split of a manifest.
    Split(corpus_cmds::SplitArgs),
    /// Write `id path` and `id text` map files for a manifest.
    ExportMaps(corpus_cmds::ExportArgs),
    /// Build a phrase-break lexicon from IPU-final words.
    Lexicon(text_cmds::LexiconArgs),
    /// Split text into synthesis units.
    Segment(text_cmds::SegmentArgs),
    /// Synthesize text unit by unit and join the audio.
    Synth(text_cmds::SynthArgs),
    /// Corpus statistics and result-table arithmetic.
    #[command(subcommand)]
    Stats(report_cmds::StatsCommand),
    /// Error analysis of synthesized output.
    #[command(subcommand)]
    Audit(report_cmds::AuditCommand),
    /// Energy-based silence detection on a WAV file.
    Silences(report_cmds::SilencesArgs),
    /// Autocorrelation pitch summary of a WAV file.
    F0(report_cmds::F0Args),
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub sink: Sink,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let cfg = RunConfig::resolve(&cli.flags)?;
    let sink = Sink::from_arg(cli.output.as_deref());
    if cli.flags.show_config {
        let toml = cfg.to_toml();
        sink.emit(&cfg, |out| out.write_all(toml.as_bytes()))?;
        return Ok(Outcome::Complete);
    }
    let Some(command) = cli.command else {
        return Err(UsageError("a subcommand is required (see --help)".into()).into());
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.value)
        .build_global()
        .ok();
    let ctx = Ctx { cfg, sink };
    match command {
        Command::Extract(a) => corpus_cmds::extract(&ctx, a),
        Command::Split(a) => corpus_cmds::split(&ctx, a),
        Command::ExportMaps(a) => corpus_cmds::export_maps(&ctx, a),
        Command::Lexicon(a) => text_cmds::lexicon(&ctx, a),
        Command::Segment(a) => text_cmds::segment(&ctx, a),
        Command::Synth(a) => text_cmds::synth(&ctx, a),
        Command::Stats(c) => report_cmds::stats(&ctx, c),
        Command::Audit(c) => report_cmds::audit(&ctx, c),
        Command::Silences(a) => report_cmds::silences(&ctx, a),
        Command::F0(a) => report_cmds::f0(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
