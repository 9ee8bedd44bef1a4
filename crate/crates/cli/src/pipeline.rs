//! Stage orchestration, artifact persistence and the run manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use signalscope_core::clustering::{hdbscan, NOISE};
use signalscope_core::corpus::{merge_title_abstract, prepare_documents, CorpusStats, Document, Stoplist};
use signalscope_core::dynamics::{
    series_peaks, series_trend, time_sliced_ctfidf, yearly_proportions, TimeSeries, DEFAULT_MAX_PEAKS,
    SLICE_TOP_TERMS,
};
use signalscope_core::embedding::{builtin_embed_seeded, pca_fit_transform, EmbeddingMatrix};
use signalscope_core::labeling::{external_label, heuristic_label, TopicLabel, DEFAULT_LABEL_TERMS};
use signalscope_core::signals::{build_tem, evolution_matrix, TemMap};
use signalscope_core::topics::{
    build_vocabulary, ctfidf_similarity, reduce_topics, top_terms, topic_similarity, TopicContext, TopicModel,
    Vocabulary,
};

use crate::config::{PipelineConfig, SimilaritySource};
use crate::http_labeler::HttpHeadlineService;
use crate::io::{load_embeddings, read_corpus, read_json, read_jsonl, read_stoplist, sha256_file, write_json, write_jsonl, VectorRow};

pub const DOCUMENTS: &str = "documents.jsonl";
pub const CORPUS_STATS: &str = "corpus_stats.json";
pub const REDUCED_EMBEDDINGS: &str = "reduced_embeddings.jsonl";
pub const EMBEDDING_STATS: &str = "embedding_stats.json";
pub const CLUSTERS: &str = "clusters.jsonl";
pub const ASSIGNMENTS: &str = "assignments.jsonl";
pub const TOPIC_SUMMARY: &str = "topic_summary.json";
pub const SIMILARITY: &str = "similarity.csv";
pub const LABEL_CANDIDATES: &str = "label_candidates.jsonl";
pub const TOPICS: &str = "topics.csv";
pub const TRENDS_DIR: &str = "trends";
pub const SIGNALS: &str = "signals.csv";
pub const TRANSITIONS: &str = "transitions.csv";
pub const MANIFEST: &str = "manifest.json";
const LOCK: &str = ".signalscope.lock";

/// Top c-TF-IDF terms listed per topic in `topics.csv`.
pub const TABLE_TERMS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Corpus,
    Embedding,
    Clustering,
    Topics,
    Labeling,
    Dynamics,
    Signals,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Corpus,
        Stage::Embedding,
        Stage::Clustering,
        Stage::Topics,
        Stage::Labeling,
        Stage::Dynamics,
        Stage::Signals,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Corpus => "corpus",
            Stage::Embedding => "embedding",
            Stage::Clustering => "clustering",
            Stage::Topics => "topics",
            Stage::Labeling => "labeling",
            Stage::Dynamics => "dynamics",
            Stage::Signals => "signals",
        }
    }

    /// Files this stage writes directly under the output directory.
    fn files(&self) -> &'static [&'static str] {
        match self {
            Stage::Corpus => &[DOCUMENTS, CORPUS_STATS],
            Stage::Embedding => &[REDUCED_EMBEDDINGS, EMBEDDING_STATS],
            Stage::Clustering => &[CLUSTERS],
            Stage::Topics => &[ASSIGNMENTS, TOPIC_SUMMARY, SIMILARITY],
            Stage::Labeling => &[LABEL_CANDIDATES, TOPICS],
            Stage::Dynamics => &[],
            Stage::Signals => &[SIGNALS, TRANSITIONS],
        }
    }

    /// Existing files and directories under `out` written by this stage.
    pub fn outputs(&self, out: &Path) -> Result<Vec<PathBuf>> {
        let mut paths: Vec<PathBuf> = self.files().iter().map(|f| out.join(f)).collect();
        match self {
            Stage::Dynamics => paths.push(out.join(TRENDS_DIR)),
            Stage::Signals if out.is_dir() => {
                for entry in fs::read_dir(out)? {
                    let name = entry?.file_name().to_string_lossy().into_owned();
                    if is_tem_file(&name) {
                        paths.push(out.join(name));
                    }
                }
            }
            _ => {}
        }
        paths.retain(|p| p.exists());
        paths.sort();
        Ok(paths)
    }

    fn remove_outputs(&self, out: &Path) -> Result<()> {
        for p in self.outputs(out)? {
            if p.is_dir() {
                fs::remove_dir_all(&p)
            } else {
                fs::remove_file(&p)
            }
            .with_context(|| format!("removing {}", p.display()))?;
        }
        Ok(())
    }
}

fn is_tem_file(name: &str) -> bool {
    name.starts_with("tem_") && name.ends_with(".json")
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRow {
    pub id: String,
    pub year: i32,
    pub tokens: Vec<String>,
    /// Merged title and abstract, as sent to the labeling service.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub ingested: usize,
    pub missing_title_or_abstract: usize,
    pub out_of_span: usize,
    pub empty_after_preprocessing: usize,
    pub documents: usize,
    pub per_year: BTreeMap<i32, usize>,
}

impl From<CorpusStats> for CorpusCounts {
    fn from(s: CorpusStats) -> Self {
        CorpusCounts {
            ingested: s.ingested,
            missing_title_or_abstract: s.missing_title_or_abstract,
            out_of_span: s.out_of_span,
            empty_after_preprocessing: s.empty_after_preprocessing,
            documents: s.documents,
            per_year: s.per_year,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingStats {
    pub source: String,
    pub input_dim: usize,
    pub vocabulary_size: usize,
    pub components: usize,
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
    /// Documents whose built-in vector is all zeros; they are kept out of clustering.
    pub zero_rows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub id: String,
    pub label: i32,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRow {
    pub id: String,
    pub topic: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub clusters: usize,
    pub topics: usize,
    pub noise: usize,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub topic: usize,
    pub label: String,
    pub source: String,
    pub failed_rounds: usize,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOut {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakOut {
    pub year: i32,
    pub value: f64,
    pub top_terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendOut {
    pub topic: usize,
    pub years: Vec<i32>,
    pub proportions: Vec<f64>,
    pub counts: Vec<usize>,
    pub fit: Option<FitOut>,
    /// `[lower, upper]` of the 95% band per year; empty without a fit.
    pub ci: Vec<[f64; 2]>,
    pub peaks: Vec<PeakOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemPointOut {
    pub topic: usize,
    pub avg_proportion: f64,
    pub growth_rate: f64,
    pub doc_count: usize,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemOut {
    pub period: [i32; 2],
    pub x_threshold: f64,
    pub points: Vec<TemPointOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub status: String,
    pub started_from: Stage,
    pub failed_stage: Option<Stage>,
    pub error: Option<String>,
    pub config: PipelineConfig,
    pub corpus: Option<CorpusCounts>,
    pub zero_embedding_rows: Option<usize>,
    pub topics: Option<TopicSummary>,
    pub warnings: Vec<String>,
    pub stages: Vec<StageTiming>,
    /// sha256 of every output file, keyed by path relative to the output directory.
    pub outputs: BTreeMap<String, String>,
    pub finished_unix: u64,
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out: PathBuf,
    pub manifest: Manifest,
}

pub fn tem_file_name(lo: i32, hi: i32) -> String {
    format!("tem_{lo}_{hi}.json")
}

pub fn trend_file(out: &Path, topic: usize) -> PathBuf {
    out.join(TRENDS_DIR).join(format!("{topic}.json"))
}

/// Exclusive hold on an output directory for the lifetime of a run.
struct OutputLock(PathBuf);

impl OutputLock {
    fn acquire(out: &Path) -> Result<Self> {
        let path = out.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(OutputLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => bail!(
                "output directory {} is in use by another run (remove {} if no run is active)",
                out.display(),
                path.display()
            ),
            Err(e) => Err(e).with_context(|| format!("creating {}", path.display())),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Upstream values, loaded from artifacts on first use when a stage did not
/// produce them in this run.
struct Workspace<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
    warnings: Vec<String>,
    documents: Option<Vec<Document>>,
    texts: Option<Vec<String>>,
    vocabulary: Option<Vocabulary>,
    reduced: Option<EmbeddingMatrix>,
    zero_rows: Option<BTreeSet<String>>,
    clusters: Option<Vec<i32>>,
    model: Option<TopicModel>,
}

impl<'a> Workspace<'a> {
    fn new(cfg: &'a PipelineConfig, out: &'a Path) -> Self {
        Workspace {
            cfg,
            out,
            warnings: Vec::new(),
            documents: None,
            texts: None,
            vocabulary: None,
            reduced: None,
            zero_rows: None,
            clusters: None,
            model: None,
        }
    }

    fn warn(&mut self, message: String) {
        warn!("{message}");
        self.warnings.push(message);
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn documents(&mut self) -> Result<&[Document]> {
        if self.documents.is_none() {
            let rows: Vec<DocumentRow> = read_jsonl(&self.path(DOCUMENTS))?;
            let (docs, texts) = rows
                .into_iter()
                .map(|r| {
                    (
                        Document {
                            id: r.id,
                            tokens: r.tokens,
                            year: r.year,
                        },
                        r.text,
                    )
                })
                .unzip();
            self.documents = Some(docs);
            self.texts = Some(texts);
        }
        Ok(self.documents.as_deref().unwrap())
    }

    fn ids(&mut self) -> Result<Vec<String>> {
        Ok(self.documents()?.iter().map(|d| d.id.clone()).collect())
    }

    fn vocabulary(&mut self) -> Result<&Vocabulary> {
        if self.vocabulary.is_none() {
            let min_df = self.cfg.min_df;
            let vocab = build_vocabulary(self.documents()?, min_df)?;
            self.vocabulary = Some(vocab);
        }
        Ok(self.vocabulary.as_ref().unwrap())
    }

    fn reduced(&mut self) -> Result<&EmbeddingMatrix> {
        if self.reduced.is_none() {
            let rows: Vec<VectorRow> = read_jsonl(&self.path(REDUCED_EMBEDDINGS))?;
            let ids = self.ids()?;
            let entries = rows.into_iter().map(|r| (r.id, r.vector)).collect();
            let m = EmbeddingMatrix::aligned(entries, &ids)
                .with_context(|| format!("{} does not match {}", REDUCED_EMBEDDINGS, DOCUMENTS))?;
            self.reduced = Some(m);
        }
        Ok(self.reduced.as_ref().unwrap())
    }

    fn zero_rows(&mut self) -> Result<&BTreeSet<String>> {
        if self.zero_rows.is_none() {
            let stats: EmbeddingStats = read_json(&self.path(EMBEDDING_STATS))?;
            self.zero_rows = Some(stats.zero_rows.into_iter().collect());
        }
        Ok(self.zero_rows.as_ref().unwrap())
    }

    fn clusters(&mut self) -> Result<&[i32]> {
        if self.clusters.is_none() {
            let rows: Vec<ClusterRow> = read_jsonl(&self.path(CLUSTERS))?;
            let labels = align(rows.into_iter().map(|r| (r.id, r.label)), &self.ids()?, CLUSTERS)?;
            self.clusters = Some(labels);
        }
        Ok(self.clusters.as_deref().unwrap())
    }

    /// Space topic centroids are taken in: the supplied vectors when
    /// external embeddings are used, the reduced ones otherwise.
    fn centroid_space(&mut self) -> Result<EmbeddingMatrix> {
        match &self.cfg.embeddings {
            Some(path) => {
                let ids = self.ids()?;
                load_embeddings(path, &ids)
            }
            None => Ok(self.reduced()?.clone()),
        }
    }

    fn model(&mut self) -> Result<&TopicModel> {
        if self.model.is_none() {
            let rows: Vec<AssignmentRow> = read_jsonl(&self.path(ASSIGNMENTS))?;
            let assignments = align(rows.into_iter().map(|r| (r.id, r.topic)), &self.ids()?, ASSIGNMENTS)?;
            let space = self.centroid_space()?;
            self.vocabulary()?;
            let ctx = TopicContext {
                documents: self.documents.as_deref().unwrap(),
                vocabulary: self.vocabulary.as_ref().unwrap(),
                embeddings: &space,
            };
            let model = TopicModel::build(ctx, &assignments)?;
            if model.assignments != assignments {
                bail!("{ASSIGNMENTS} is not ordered by topic size");
            }
            self.model = Some(model);
        }
        Ok(self.model.as_ref().unwrap())
    }
}

/// Reorders `(id, value)` pairs to `ids`, failing on gaps or extras.
fn align<T: Copy>(rows: impl Iterator<Item = (String, T)>, ids: &[String], file: &str) -> Result<Vec<T>> {
    let map: BTreeMap<String, T> = rows.collect();
    if map.len() != ids.len() {
        bail!("{file} has {} rows for {} documents", map.len(), ids.len());
    }
    ids.iter()
        .map(|id| map.get(id).copied().ok_or_else(|| anyhow!("{file} has no row for document {id:?}")))
        .collect()
}

fn write_csv<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn stage_corpus(ws: &mut Workspace<'_>) -> Result<()> {
    let cfg = ws.cfg;
    let records = read_corpus(cfg.corpus_path()?)?;
    let stoplist = match &cfg.stoplist {
        Some(p) => read_stoplist(p)?,
        None => Stoplist::english(),
    };
    let scheme = cfg.periods()?;
    let (docs, stats) = prepare_documents(&records, &stoplist, &scheme)?;
    info!(
        "corpus: {} records ingested, {} documents kept",
        stats.ingested, stats.documents
    );
    let by_id: BTreeMap<&str, _> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let texts: Vec<String> = docs.iter().map(|d| merge_title_abstract(by_id[d.id.as_str()])).collect();
    write_jsonl(
        &ws.path(DOCUMENTS),
        docs.iter().zip(&texts).map(|(d, t)| DocumentRow {
            id: d.id.clone(),
            year: d.year,
            tokens: d.tokens.clone(),
            text: t.clone(),
        }),
    )?;
    write_json(&ws.path(CORPUS_STATS), &CorpusCounts::from(stats))?;
    ws.documents = Some(docs);
    ws.texts = Some(texts);
    Ok(())
}

fn stage_embedding(ws: &mut Workspace<'_>) -> Result<()> {
    let cfg = ws.cfg;
    let vocabulary_size = ws.vocabulary()?.len();
    let (source, matrix, zero_rows) = match &cfg.embeddings {
        Some(path) => {
            let ids = ws.ids()?;
            ("external", load_embeddings(path, &ids)?, Vec::new())
        }
        None => {
            let docs = ws.documents.as_deref().unwrap();
            let built = builtin_embed_seeded(docs, ws.vocabulary.as_ref().unwrap(), cfg.seed);
            let zero: Vec<String> = built.zero_rows.iter().map(|&i| docs[i].id.clone()).collect();
            ("builtin", built.matrix, zero)
        }
    };
    if !zero_rows.is_empty() {
        ws.warn(format!(
            "{} documents have no vocabulary terms and are treated as noise",
            zero_rows.len()
        ));
    }
    let max_k = matrix.n_rows().min(matrix.dim());
    let k = cfg.pca_k.min(max_k);
    if k < cfg.pca_k {
        ws.warn(format!("pca_k {} exceeds the data rank bound {max_k}; using {k}", cfg.pca_k));
    }
    let (pca, reduced) = pca_fit_transform(&matrix, k)?;
    info!("embedding: {} x {} reduced to {k} components", matrix.n_rows(), matrix.dim());
    write_jsonl(
        &ws.path(REDUCED_EMBEDDINGS),
        reduced.ids().iter().zip(reduced.rows()).map(|(id, row)| VectorRow {
            id: id.clone(),
            vector: row.to_vec(),
        }),
    )?;
    write_json(
        &ws.path(EMBEDDING_STATS),
        &EmbeddingStats {
            source: source.into(),
            input_dim: matrix.dim(),
            vocabulary_size,
            components: k,
            explained_variance: pca.explained_variance.clone(),
            total_variance: pca.total_variance,
            zero_rows: zero_rows.clone(),
        },
    )?;
    ws.reduced = Some(reduced);
    ws.zero_rows = Some(zero_rows.into_iter().collect());
    Ok(())
}

fn stage_clustering(ws: &mut Workspace<'_>) -> Result<()> {
    let params = ws.cfg.cluster_params()?;
    let zero = ws.zero_rows()?.clone();
    let reduced = ws.reduced()?;
    let keep: Vec<usize> = (0..reduced.n_rows()).filter(|&i| !zero.contains(&reduced.ids()[i])).collect();
    let points: Vec<&[f64]> = keep.iter().map(|&i| reduced.row(i)).collect();
    let result = hdbscan(&points, &params)?;
    let mut labels = vec![NOISE; reduced.n_rows()];
    let mut probabilities = vec![0.0; reduced.n_rows()];
    for (k, &i) in keep.iter().enumerate() {
        labels[i] = result.labels[k];
        probabilities[i] = result.probabilities[k];
    }
    info!(
        "clustering: {} clusters, {} noise documents",
        result.n_clusters(),
        labels.iter().filter(|&&l| l == NOISE).count()
    );
    let ids = reduced.ids().to_vec();
    if result.n_clusters() == 0 {
        ws.warn("clustering found no clusters; every document is noise".into());
    }
    write_jsonl(
        &ws.path(CLUSTERS),
        ids.iter().zip(&labels).zip(&probabilities).map(|((id, &label), &probability)| ClusterRow {
            id: id.clone(),
            label,
            probability,
        }),
    )?;
    ws.clusters = Some(labels);
    Ok(())
}

fn stage_topics(ws: &mut Workspace<'_>) -> Result<()> {
    let cfg = ws.cfg;
    let labels = ws.clusters()?.to_vec();
    let space = ws.centroid_space()?;
    ws.vocabulary()?;
    let ctx = TopicContext {
        documents: ws.documents.as_deref().unwrap(),
        vocabulary: ws.vocabulary.as_ref().unwrap(),
        embeddings: &space,
    };
    let initial = TopicModel::build(ctx, &labels)?;
    let model = reduce_topics(&initial, ctx, cfg.max_topics)?;
    let t = model.n_topics();
    info!("topics: {} clusters reduced to {t} topics", initial.n_topics());
    let similarity = if t == 0 {
        Vec::new()
    } else {
        match cfg.similarity {
            SimilaritySource::Embedding => topic_similarity(&model)?,
            SimilaritySource::Ctfidf => ctfidf_similarity(&model)?,
        }
    };
    write_jsonl(
        &ws.path(ASSIGNMENTS),
        ctx.documents.iter().zip(&model.assignments).map(|(d, &topic)| AssignmentRow {
            id: d.id.clone(),
            topic,
        }),
    )?;
    write_json(
        &ws.path(TOPIC_SUMMARY),
        &TopicSummary {
            clusters: initial.n_topics(),
            topics: t,
            noise: model.noise_count(),
            counts: model.counts.clone(),
        },
    )?;
    let header: Vec<String> = std::iter::once("topic_id".to_string())
        .chain((0..t).map(|j| j.to_string()))
        .collect();
    write_csv(
        &ws.path(SIMILARITY),
        &header,
        similarity
            .iter()
            .enumerate()
            .map(|(i, row)| std::iter::once(i.to_string()).chain(row.iter().map(|v| v.to_string())).collect::<Vec<_>>()),
    )?;
    ws.model = Some(model);
    Ok(())
}

fn label_topics(ws: &mut Workspace<'_>) -> Result<Vec<TopicLabel>> {
    let cfg = ws.cfg;
    ws.model()?;
    let model = ws.model.as_ref().unwrap();
    let vocab = ws.vocabulary.as_ref().unwrap();
    let t = model.n_topics();
    let Some(endpoint) = &cfg.labeler.endpoint else {
        return (0..t)
            .map(|k| Ok(heuristic_label(model, vocab, k, DEFAULT_LABEL_TERMS)?))
            .collect();
    };
    let texts = ws.texts.as_deref().unwrap();
    let lcfg = cfg.labeler_config();
    let service = HttpHeadlineService::new(endpoint, Duration::from_secs(cfg.labeler.timeout_secs));
    let next = AtomicUsize::new(0);
    let slots = Mutex::new(vec![None; t]);
    std::thread::scope(|s| {
        for _ in 0..cfg.labeler.max_in_flight.min(t) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= t {
                    break;
                }
                let r = external_label(&service, model, vocab, k, texts, &lcfg);
                slots.lock().unwrap()[k] = Some(r);
            });
        }
    });
    let mut labels = Vec::with_capacity(t);
    for slot in slots.into_inner().unwrap() {
        labels.push(slot.expect("every topic labeled")?);
    }
    Ok(labels)
}

fn stage_labeling(ws: &mut Workspace<'_>) -> Result<()> {
    let labels = label_topics(ws)?;
    let rounds = ws.cfg.labeler.repetitions;
    for l in &labels {
        if l.failed_rounds == rounds {
            ws.warn(format!("topic {}: every labeling round failed; using the heuristic label", l.topic));
        } else if l.failed_rounds > 0 {
            ws.warn(format!("topic {}: {} of {rounds} labeling rounds failed", l.topic, l.failed_rounds));
        }
    }
    let model = ws.model.as_ref().unwrap();
    let vocab = ws.vocabulary.as_ref().unwrap();
    write_jsonl(
        &ws.path(LABEL_CANDIDATES),
        labels.iter().map(|l| LabelRow {
            topic: l.topic,
            label: l.label.clone(),
            source: l.source.as_str().into(),
            failed_rounds: l.failed_rounds,
            candidates: l.candidates.clone(),
        }),
    )?;
    let header = ["topic_id", "label", "count", "top_terms"].map(String::from);
    write_csv(
        &ws.path(TOPICS),
        &header,
        labels.iter().map(|l| {
            let terms: Vec<String> = top_terms(&model.ctfidf, vocab, l.topic, TABLE_TERMS)
                .into_iter()
                .map(|(t, _)| t)
                .collect();
            [
                l.topic.to_string(),
                l.label.clone(),
                model.counts[l.topic].to_string(),
                terms.join("|"),
            ]
        }),
    )?;
    Ok(())
}

fn series(ws: &mut Workspace<'_>) -> Result<Vec<TimeSeries>> {
    let (start, end) = (ws.cfg.period_start, ws.cfg.period_end);
    ws.model()?;
    let yearly = yearly_proportions(ws.model.as_ref().unwrap(), ws.documents.as_deref().unwrap(), start..=end);
    Ok(yearly.series)
}

fn stage_dynamics(ws: &mut Workspace<'_>) -> Result<()> {
    let all = series(ws)?;
    let model = ws.model.as_ref().unwrap();
    let slices = time_sliced_ctfidf(
        ws.documents.as_deref().unwrap(),
        &model.assignments,
        ws.vocabulary.as_ref().unwrap(),
        &model.ctfidf,
        ws.cfg.slice_idf.into(),
        SLICE_TOP_TERMS,
    );
    let slice_terms: BTreeMap<(usize, i32), Vec<String>> = slices
        .into_iter()
        .map(|s| ((s.topic, s.year), s.terms.into_iter().map(|(t, _)| t).collect()))
        .collect();
    fs::create_dir_all(ws.path(TRENDS_DIR))?;
    for s in &all {
        let (fit, ci) = match series_trend(s) {
            Ok(f) => {
                let ci = f.fitted.iter().zip(&f.ci_half_width).map(|(y, h)| [y - h, y + h]).collect();
                (
                    Some(FitOut {
                        slope: f.slope,
                        intercept: f.intercept,
                    }),
                    ci,
                )
            }
            Err(_) => (None, Vec::new()),
        };
        let peaks = series_peaks(s, DEFAULT_MAX_PEAKS)
            .peaks
            .into_iter()
            .map(|(year, value)| PeakOut {
                year,
                value,
                top_terms: slice_terms.get(&(s.topic, year)).cloned().unwrap_or_default(),
            })
            .collect();
        write_json(
            &trend_file(ws.out, s.topic),
            &TrendOut {
                topic: s.topic,
                years: s.years.clone(),
                proportions: s.proportions.clone(),
                counts: s.counts.clone(),
                fit,
                ci,
                peaks,
            },
        )?;
    }
    Ok(())
}

fn tem_out(map: &TemMap) -> TemOut {
    TemOut {
        period: [map.period.lo, map.period.hi],
        x_threshold: map.x_threshold,
        points: map
            .points
            .iter()
            .zip(&map.classes)
            .map(|(p, c)| TemPointOut {
                topic: p.topic,
                avg_proportion: p.avg_proportion,
                growth_rate: p.growth_rate,
                doc_count: p.doc_count,
                class: c.as_str().into(),
            })
            .collect(),
    }
}

fn stage_signals(ws: &mut Workspace<'_>) -> Result<()> {
    let all = series(ws)?;
    let scheme = ws.cfg.periods()?;
    let growth = ws.cfg.growth.into();
    let maps: Vec<TemMap> = scheme.periods.iter().map(|&p| build_tem(&all, p, growth)).collect();
    for m in &maps {
        write_json(&ws.path(&tem_file_name(m.period.lo, m.period.hi)), &tem_out(m))?;
    }
    let evolution = evolution_matrix(&maps, all.len());
    let period_names: Vec<String> = scheme.periods.iter().map(|p| format!("{}-{}", p.lo, p.hi)).collect();
    let header: Vec<String> = std::iter::once("topic_id".to_string()).chain(period_names.iter().cloned()).collect();
    write_csv(
        &ws.path(SIGNALS),
        &header,
        evolution.matrix.iter().enumerate().map(|(t, row)| {
            std::iter::once(t.to_string())
                .chain(row.iter().map(|c| c.as_str().to_string()))
                .collect::<Vec<_>>()
        }),
    )?;
    let header = ["topic_id", "from_period", "to_period", "from", "to"].map(String::from);
    write_csv(
        &ws.path(TRANSITIONS),
        &header,
        evolution.transitions().into_iter().map(|tr| {
            [
                tr.topic.to_string(),
                period_names[tr.period].clone(),
                period_names[tr.period + 1].clone(),
                tr.from.as_str().to_string(),
                tr.to.as_str().to_string(),
            ]
        }),
    )?;
    Ok(())
}

fn run_stage(stage: Stage, ws: &mut Workspace<'_>) -> Result<()> {
    match stage {
        Stage::Corpus => stage_corpus(ws),
        Stage::Embedding => stage_embedding(ws),
        Stage::Clustering => stage_clustering(ws),
        Stage::Topics => stage_topics(ws),
        Stage::Labeling => stage_labeling(ws),
        Stage::Dynamics => stage_dynamics(ws),
        Stage::Signals => stage_signals(ws),
    }
}

fn hash_outputs(out: &Path) -> Result<BTreeMap<String, String>> {
    let mut hashes = BTreeMap::new();
    for stage in Stage::ALL {
        for p in stage.outputs(out)? {
            let files: Vec<PathBuf> = if p.is_dir() {
                let mut v: Vec<PathBuf> = fs::read_dir(&p)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
                v.sort();
                v
            } else {
                vec![p]
            };
            for f in files {
                let rel = f.strip_prefix(out).unwrap_or(&f).to_string_lossy().replace('\\', "/");
                hashes.insert(rel, sha256_file(&f)?);
            }
        }
    }
    Ok(hashes)
}

fn optional<T: serde::de::DeserializeOwned>(path: PathBuf) -> Option<T> {
    path.is_file().then(|| read_json(&path).ok()).flatten()
}

fn manifest(
    cfg: &PipelineConfig,
    out: &Path,
    from: Stage,
    timings: Vec<StageTiming>,
    warnings: Vec<String>,
    failure: Option<(Stage, String)>,
) -> Result<Manifest> {
    let zero = optional::<EmbeddingStats>(out.join(EMBEDDING_STATS)).map(|s| s.zero_rows.len());
    let (failed_stage, error) = match failure {
        Some((s, e)) => (Some(s), Some(e)),
        None => (None, None),
    };
    Ok(Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        status: if failed_stage.is_some() { "failed" } else { "ok" }.into(),
        started_from: from,
        failed_stage,
        error,
        config: cfg.clone(),
        corpus: optional(out.join(CORPUS_STATS)),
        zero_embedding_rows: zero,
        topics: optional(out.join(TOPIC_SUMMARY)),
        warnings,
        stages: timings,
        outputs: hash_outputs(out)?,
        finished_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    })
}

/// Runs every stage from `from` onward, writing into `cfg.out`.
///
/// Earlier stages are not rerun; their artifacts are read back from the
/// output directory. On failure the outputs of the attempted stages are
/// removed and a manifest recording the failed stage is written.
pub fn run(cfg: PipelineConfig, from: Stage) -> Result<RunSummary> {
    let cfg = cfg.resolve();
    cfg.validate()?;
    let out = cfg.out.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating output directory {}", out.display()))?;
    let _lock = OutputLock::acquire(&out)?;
    let manifest_path = out.join(MANIFEST);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path)?;
    }

    let mut ws = Workspace::new(&cfg, &out);
    let mut timings = Vec::new();
    let mut failure = None;
    for stage in Stage::ALL.into_iter().filter(|&s| s >= from) {
        stage.remove_outputs(&out)?;
        let started = Instant::now();
        info!("stage {stage}");
        if let Err(e) = run_stage(stage, &mut ws) {
            failure = Some((stage, format!("{e:#}")));
            break;
        }
        timings.push(StageTiming {
            stage,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    let warnings = std::mem::take(&mut ws.warnings);
    drop(ws);

    if let Some((stage, message)) = failure {
        for s in Stage::ALL.into_iter().filter(|&s| s >= from) {
            s.remove_outputs(&out)?;
        }
        let m = manifest(&cfg, &out, from, timings, warnings, Some((stage, message.clone())))?;
        write_json(&manifest_path, &m)?;
        return Err(anyhow!("stage {stage} failed: {message}"));
    }
    let m = manifest(&cfg, &out, from, timings, warnings, None)?;
    write_json(&manifest_path, &m)?;
    Ok(RunSummary { out, manifest: m })
}
