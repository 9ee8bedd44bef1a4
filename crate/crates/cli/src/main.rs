use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use signalscope::config::{Growth, PipelineConfig, SimilaritySource, SliceIdfMode};
use signalscope::pipeline::{run, Stage};
use signalscope::report::report_summary;
use signalscope::synth::write_synth;
use signalscope_core::synth::SynthConfig;

#[derive(Parser)]
#[command(name = "signalscope", version, about = "Topic emergence and weak-signal detection for timestamped corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline (or its tail with --from) into an output directory.
    Run(Box<RunArgs>),
    /// Write a corpus with planted topics plus its ground truth.
    SynthCorpus(SynthArgs),
    /// Print the topic table of a finished run.
    Report {
        /// Output directory of a completed run.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// Newline-delimited `{"id", "vector"}` file.
    #[arg(long, conflicts_with = "builtin_embedder")]
    embeddings: Option<PathBuf>,
    /// Use the built-in TF-IDF embedder (the default when no embeddings are given).
    #[arg(long)]
    builtin_embedder: bool,
    #[arg(long)]
    pca_k: Option<usize>,
    #[arg(long)]
    min_cluster_size: Option<usize>,
    #[arg(long)]
    min_samples: Option<usize>,
    #[arg(long)]
    allow_single_cluster: bool,
    #[arg(long)]
    max_topics: Option<usize>,
    #[arg(long)]
    min_df: Option<usize>,
    #[arg(long)]
    period_start: Option<i32>,
    #[arg(long)]
    period_end: Option<i32>,
    #[arg(long)]
    period_width: Option<i32>,
    /// Base URL of a headline service exposing `POST /label`.
    #[arg(long)]
    labeler_endpoint: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    similarity: Option<SimilaritySource>,
    #[arg(long, value_enum)]
    growth: Option<Growth>,
    #[arg(long, value_enum)]
    slice_idf: Option<SliceIdfMode>,
    /// First stage to execute; earlier stages are read from the output directory.
    #[arg(long, value_enum, default_value = "corpus")]
    from: Stage,
}

impl RunArgs {
    fn into_config(self) -> Result<(PipelineConfig, Stage)> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$field = v;
                }
            )*};
        }
        set!(pca_k, min_cluster_size, max_topics, min_df, period_start, period_end, period_width, seed, out);
        set!(similarity, growth, slice_idf);
        if self.corpus.is_some() {
            c.corpus = self.corpus;
        }
        if self.stoplist.is_some() {
            c.stoplist = self.stoplist;
        }
        if self.embeddings.is_some() {
            c.embeddings = self.embeddings;
        }
        if self.builtin_embedder {
            c.embeddings = None;
        }
        if self.min_samples.is_some() {
            c.min_samples = self.min_samples;
        }
        if self.allow_single_cluster {
            c.allow_single_cluster = true;
        }
        if self.labeler_endpoint.is_some() {
            c.labeler.endpoint = self.labeler_endpoint;
        }
        Ok((c, self.from))
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 5)]
    topics: usize,
    #[arg(long, default_value_t = 200)]
    docs_per_topic: usize,
    /// Inclusive year span, e.g. 2004-2021.
    #[arg(long, default_value = "2004-2021", value_parser = parse_years)]
    years: (i32, i32),
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    abstract_words: usize,
    /// Corpus path; ground truth and planted topics are written next to it.
    #[arg(long)]
    out: PathBuf,
}

fn parse_years(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s.split_once('-').ok_or("expected START-END")?;
    let a = a.trim().parse().map_err(|e| format!("bad start year: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("bad end year: {e}"))?;
    Ok((a, b))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let (config, from) = args.into_config()?;
            let summary = run(config, from)?;
            let topics = summary.manifest.topics.as_ref().map_or(0, |t| t.topics);
            println!("{} topics written to {}", topics, summary.out.display());
        }
        Command::SynthCorpus(a) => {
            let config = SynthConfig {
                k_topics: a.topics,
                docs_per_topic: a.docs_per_topic,
                start_year: a.years.0,
                end_year: a.years.1,
                seed: a.seed,
                abstract_words: a.abstract_words,
                ..SynthConfig::default()
            };
            let (corpus, files) = write_synth(&config, &a.out)?;
            println!(
                "{} records written to {} (truth: {}, planted topics: {})",
                corpus.records.len(),
                files.corpus.display(),
                files.truth.display(),
                files.planted.display()
            );
        }
        Command::Report { dir } => print!("{}", report_summary(&dir)?),
    }
    Ok(())
}
