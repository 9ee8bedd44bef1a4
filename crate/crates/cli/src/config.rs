use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use signalscope_core::clustering::ClusterParams;
use signalscope_core::corpus::{build_periods, PeriodScheme};
use signalscope_core::dynamics::SliceIdf;
use signalscope_core::embedding::DEFAULT_PCA_K;
use signalscope_core::labeling::LabelerConfig;
use signalscope_core::signals::GrowthMethod;
use signalscope_core::topics::{DEFAULT_MAX_TOPICS, DEFAULT_MIN_DF};

/// What topic similarity is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SimilaritySource {
    #[default]
    Embedding,
    Ctfidf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Growth {
    #[default]
    RelativeChange,
    OlsSlope,
}

impl From<Growth> for GrowthMethod {
    fn from(g: Growth) -> Self {
        match g {
            Growth::RelativeChange => GrowthMethod::RelativeChange,
            Growth::OlsSlope => GrowthMethod::OlsSlope,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SliceIdfMode {
    #[default]
    Global,
    Local,
}

impl From<SliceIdfMode> for SliceIdf {
    fn from(m: SliceIdfMode) -> Self {
        match m {
            SliceIdfMode::Global => SliceIdf::Global,
            SliceIdfMode::Local => SliceIdf::Local,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelerSettings {
    pub endpoint: Option<String>,
    pub sample_size: usize,
    pub repetitions: usize,
    pub max_request_tokens: usize,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for LabelerSettings {
    fn default() -> Self {
        let core = LabelerConfig::default();
        LabelerSettings {
            endpoint: None,
            sample_size: core.sample_size,
            repetitions: core.repetitions,
            max_request_tokens: core.max_request_tokens,
            timeout_secs: 30,
            max_in_flight: 8,
        }
    }
}

/// Everything a run depends on. Serialized verbatim into the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    /// External embeddings; `None` selects the built-in embedder.
    pub embeddings: Option<PathBuf>,
    pub pca_k: usize,
    pub min_cluster_size: usize,
    /// Defaults to `min_cluster_size` when absent.
    pub min_samples: Option<usize>,
    pub allow_single_cluster: bool,
    pub max_topics: usize,
    pub min_df: usize,
    pub period_start: i32,
    pub period_end: i32,
    pub period_width: i32,
    pub seed: u64,
    pub out: PathBuf,
    pub similarity: SimilaritySource,
    pub growth: Growth,
    pub slice_idf: SliceIdfMode,
    pub labeler: LabelerSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            stoplist: None,
            embeddings: None,
            pca_k: DEFAULT_PCA_K,
            min_cluster_size: 12,
            min_samples: None,
            allow_single_cluster: false,
            max_topics: DEFAULT_MAX_TOPICS,
            min_df: DEFAULT_MIN_DF,
            period_start: 2004,
            period_end: 2021,
            period_width: 6,
            seed: 42,
            out: PathBuf::from("out"),
            similarity: SimilaritySource::default(),
            growth: Growth::default(),
            slice_idf: SliceIdfMode::default(),
            labeler: LabelerSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fills derived defaults so the manifest records every effective value.
    pub fn resolve(mut self) -> Self {
        self.min_samples = Some(self.min_samples.unwrap_or(self.min_cluster_size));
        self
    }

    pub fn cluster_params(&self) -> Result<ClusterParams> {
        let params = ClusterParams::new(
            self.min_cluster_size,
            self.min_samples.unwrap_or(self.min_cluster_size),
        )?;
        Ok(params.with_single_cluster(self.allow_single_cluster))
    }

    pub fn periods(&self) -> Result<PeriodScheme> {
        Ok(build_periods(self.period_start, self.period_end, self.period_width)?)
    }

    pub fn labeler_config(&self) -> LabelerConfig {
        LabelerConfig {
            sample_size: self.labeler.sample_size,
            repetitions: self.labeler.repetitions,
            max_request_tokens: self.labeler.max_request_tokens,
            seed: self.seed,
        }
    }

    pub fn corpus_path(&self) -> Result<&Path> {
        match &self.corpus {
            Some(p) => Ok(p),
            None => bail!("no corpus given (use --corpus or the config file)"),
        }
    }

    /// Checks everything that can be checked without reading the corpus.
    pub fn validate(&self) -> Result<()> {
        self.periods()?;
        self.cluster_params()?;
        let corpus = self.corpus_path()?;
        if !corpus.is_file() {
            bail!("corpus file {} does not exist", corpus.display());
        }
        if let Some(s) = &self.stoplist {
            if !s.is_file() {
                bail!("stoplist file {} does not exist", s.display());
            }
        }
        if let Some(e) = &self.embeddings {
            if !e.is_file() {
                bail!("embeddings file {} does not exist", e.display());
            }
        }
        if self.pca_k == 0 {
            bail!("pca_k must be at least 1");
        }
        if self.max_topics == 0 {
            bail!("max_topics must be at least 1");
        }
        if self.min_df == 0 {
            bail!("min_df must be at least 1");
        }
        let l = &self.labeler;
        if l.sample_size == 0 || l.repetitions == 0 || l.max_request_tokens == 0 {
            bail!("labeler sample_size, repetitions and max_request_tokens must be positive");
        }
        if l.max_in_flight == 0 || l.timeout_secs == 0 {
            bail!("labeler max_in_flight and timeout_secs must be positive");
        }
        if let Some(url) = &l.endpoint {
            if !(url.starts_with("http://") || url.starts_with("https://")) {
                bail!("labeler endpoint {url:?} must be an http(s) URL");
            }
        }
        Ok(())
    }
}
