//! `synth-corpus`: planted-topic corpora with ground truth on disk.

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use serde::Serialize;
use signalscope_core::synth::{synth_corpus, SynthConfig, SynthCorpus};

use crate::io::{write_corpus, write_json, write_jsonl};

#[derive(Serialize)]
struct TruthRow<'a> {
    id: &'a str,
    topic: usize,
}

#[derive(Serialize)]
struct PlantedOut<'a> {
    topic: usize,
    profile: &'static str,
    terms: &'a [String],
    yearly_counts: &'a [usize],
    burst_year: Option<i32>,
    burst_term: Option<&'a str>,
}

#[derive(Serialize)]
struct PlantedFile<'a> {
    start_year: i32,
    end_year: i32,
    seed: u64,
    background: &'a [String],
    topics: Vec<PlantedOut<'a>>,
}

#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub corpus: PathBuf,
    pub truth: PathBuf,
    pub planted: PathBuf,
}

/// `corpus.jsonl` -> `corpus.truth.jsonl` and `corpus.planted.json`.
pub fn sibling_paths(corpus: &Path) -> (PathBuf, PathBuf) {
    let stem = corpus.file_stem().map_or_else(|| "corpus".into(), |s| s.to_string_lossy().into_owned());
    (
        corpus.with_file_name(format!("{stem}.truth.jsonl")),
        corpus.with_file_name(format!("{stem}.planted.json")),
    )
}

pub fn write_synth(config: &SynthConfig, corpus_path: &Path) -> Result<(SynthCorpus, SynthFiles)> {
    if config.k_topics == 0 || config.docs_per_topic == 0 || config.abstract_words == 0 {
        bail!("topics, docs-per-topic and abstract-words must be positive");
    }
    if config.end_year < config.start_year {
        bail!("end year {} precedes start year {}", config.end_year, config.start_year);
    }
    let corpus = synth_corpus(config);
    if let Some(dir) = corpus_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let (truth, planted) = sibling_paths(corpus_path);
    write_corpus(corpus_path, &corpus.records)?;
    write_jsonl(
        &truth,
        corpus.records.iter().zip(&corpus.truth).map(|(r, &topic)| TruthRow { id: &r.id, topic }),
    )?;
    write_json(
        &planted,
        &PlantedFile {
            start_year: config.start_year,
            end_year: config.end_year,
            seed: config.seed,
            background: &corpus.background,
            topics: corpus
                .topics
                .iter()
                .map(|t| PlantedOut {
                    topic: t.topic,
                    profile: t.profile.as_str(),
                    terms: &t.terms,
                    yearly_counts: &t.yearly_counts,
                    burst_year: t.burst.as_ref().map(|b| b.0),
                    burst_term: t.burst.as_ref().map(|b| b.1.as_str()),
                })
                .collect(),
        },
    )?;
    Ok((
        corpus,
        SynthFiles {
            corpus: corpus_path.to_path_buf(),
            truth,
            planted,
        },
    ))
}
