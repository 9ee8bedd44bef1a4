//! Class-based TF-IDF topic representation, topic reduction and topic
//! similarity.
//!
//! For class `c` and term `t`:
//!
//! ```text
//! tf(t, c) = count of t in class c / total term count of class c
//! f(t)     = count of t over all classes
//! A        = mean total term count per class
//! W(t, c)  = tf(t, c) * ln(1 + A / f(t))
//! ```
//!
//! Counts cover every vocabulary term (unigrams and bigrams). Bigrams are
//! adjacent pairs inside a document; pairs never span two documents.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::clustering::NOISE;
use crate::corpus::Document;
use crate::embedding::EmbeddingMatrix;
use crate::fmath::{cosine, ln, norm};

pub const DEFAULT_MIN_DF: usize = 3;
pub const DEFAULT_MAX_TOPICS: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopicError {
    #[error("vocabulary is empty (min_df = {min_df})")]
    EmptyVocabulary { min_df: usize },
    #[error("min_df must be at least 1")]
    InvalidMinDf,
    #[error("no non-noise documents to build topics from")]
    NoClasses,
    #[error("topic {0} has no vocabulary tokens")]
    EmptyClass(usize),
    #[error("topic {0} has a zero-norm embedding")]
    ZeroNormEmbedding(usize),
    #[error("{assignments} assignments for {documents} documents")]
    LengthMismatch { assignments: usize, documents: usize },
}

/// Unigram and bigram terms in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: BTreeMap<String, usize>,
    df: Vec<usize>,
    has_bigrams: bool,
}

impl Vocabulary {
    /// Vocabulary over explicit terms with document frequencies taken from `documents`.
    pub fn from_terms<I, S>(terms: I, documents: &[Document]) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = terms.into_iter().map(Into::into).collect();
        let mut vocab = Self::from_sorted(set.into_iter().collect());
        let mut df = vec![0usize; vocab.len()];
        for doc in documents {
            let seen: BTreeSet<usize> = vocab.term_ids(&doc.tokens).into_iter().collect();
            seen.into_iter().for_each(|t| df[t] += 1);
        }
        vocab.df = df;
        vocab
    }

    fn from_sorted(terms: Vec<String>) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let has_bigrams = terms.iter().any(|t| t.contains(' '));
        let df = vec![0; terms.len()];
        Vocabulary {
            terms,
            index,
            df,
            has_bigrams,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self) -> &[usize] {
        &self.df
    }

    /// Every vocabulary term occurrence in a token sequence, unigrams and bigrams.
    pub fn term_ids(&self, tokens: &[String]) -> Vec<usize> {
        let mut out = Vec::with_capacity(tokens.len() * 2);
        let mut pair = String::new();
        for (i, token) in tokens.iter().enumerate() {
            if let Some(id) = self.id(token) {
                out.push(id);
            }
            if self.has_bigrams {
                if let Some(next) = tokens.get(i + 1) {
                    pair.clear();
                    pair.push_str(token);
                    pair.push(' ');
                    pair.push_str(next);
                    if let Some(id) = self.id(&pair) {
                        out.push(id);
                    }
                }
            }
        }
        out
    }
}

fn doc_terms(tokens: &[String]) -> BTreeSet<String> {
    let mut set: BTreeSet<String> = tokens.iter().cloned().collect();
    for pair in tokens.windows(2) {
        let mut bigram = String::with_capacity(pair[0].len() + pair[1].len() + 1);
        bigram.push_str(&pair[0]);
        bigram.push(' ');
        bigram.push_str(&pair[1]);
        set.insert(bigram);
    }
    set
}

/// Unigrams and adjacent bigrams appearing in at least `min_df` documents.
pub fn build_vocabulary(documents: &[Document], min_df: usize) -> Result<Vocabulary, TopicError> {
    if min_df == 0 {
        return Err(TopicError::InvalidMinDf);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in documents {
        for term in doc_terms(&doc.tokens) {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let kept: Vec<(String, usize)> = df.into_iter().filter(|&(_, c)| c >= min_df).collect();
    if kept.is_empty() {
        return Err(TopicError::EmptyVocabulary { min_df });
    }
    let (terms, counts): (Vec<String>, Vec<usize>) = kept.into_iter().unzip();
    let mut vocab = Vocabulary::from_sorted(terms);
    vocab.df = counts;
    Ok(vocab)
}

/// Per-topic term weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CtfidfMatrix {
    /// One row per topic, one column per vocabulary term.
    pub weights: Vec<Vec<f64>>,
    pub class_token_totals: Vec<f64>,
    pub term_corpus_freq: Vec<f64>,
    pub avg_tokens_per_class: f64,
}

impl CtfidfMatrix {
    pub fn n_topics(&self) -> usize {
        self.weights.len()
    }

    fn empty(vocab_len: usize) -> Self {
        CtfidfMatrix {
            weights: Vec::new(),
            class_token_totals: Vec::new(),
            term_corpus_freq: vec![0.0; vocab_len],
            avg_tokens_per_class: 0.0,
        }
    }
}

/// Raw per-class term counts, `n_classes` rows.
pub(crate) fn class_counts<'a, I>(groups: I, n_classes: usize, vocabulary: &Vocabulary) -> Vec<Vec<f64>>
where
    I: IntoIterator<Item = (usize, &'a Document)>,
{
    let mut counts = vec![vec![0.0; vocabulary.len()]; n_classes];
    for (class, doc) in groups {
        let row = &mut counts[class];
        for term in vocabulary.term_ids(&doc.tokens) {
            row[term] += 1.0;
        }
    }
    counts
}

pub(crate) fn weigh(tf_counts: &[f64], total: f64, idf_freq: &[f64], avg: f64) -> Vec<f64> {
    tf_counts
        .iter()
        .zip(idf_freq)
        .map(|(&count, &f)| {
            if count == 0.0 || f == 0.0 {
                0.0
            } else {
                (count / total) * ln(1.0 + avg / f)
            }
        })
        .collect()
}

fn n_classes(assignments: &[i32]) -> usize {
    assignments.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize)
}

/// Class-based TF-IDF over topic classes; noise documents are excluded.
pub fn ctfidf(
    documents: &[Document],
    assignments: &[i32],
    vocabulary: &Vocabulary,
) -> Result<CtfidfMatrix, TopicError> {
    if assignments.len() != documents.len() {
        return Err(TopicError::LengthMismatch {
            assignments: assignments.len(),
            documents: documents.len(),
        });
    }
    let t = n_classes(assignments);
    if t == 0 {
        return Err(TopicError::NoClasses);
    }
    let groups = documents
        .iter()
        .zip(assignments)
        .filter(|(_, &a)| a != NOISE)
        .map(|(d, &a)| (a as usize, d));
    let counts = class_counts(groups, t, vocabulary);

    let totals: Vec<f64> = counts.iter().map(|row| row.iter().sum()).collect();
    if let Some(empty) = totals.iter().position(|&s| s == 0.0) {
        return Err(TopicError::EmptyClass(empty));
    }
    let mut freq = vec![0.0; vocabulary.len()];
    for row in &counts {
        freq.iter_mut().zip(row).for_each(|(f, c)| *f += c);
    }
    let avg = totals.iter().sum::<f64>() / t as f64;
    let weights = counts
        .iter()
        .zip(&totals)
        .map(|(row, &total)| weigh(row, total, &freq, avg))
        .collect();
    Ok(CtfidfMatrix {
        weights,
        class_token_totals: totals,
        term_corpus_freq: freq,
        avg_tokens_per_class: avg,
    })
}

/// Indices of the `n` largest positive entries, descending, ties by lower index.
pub(crate) fn top_indices(weights: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    idx.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

/// The `n` highest-weight terms of a topic; ties go to the lexicographically smaller term.
pub fn top_terms(
    matrix: &CtfidfMatrix,
    vocabulary: &Vocabulary,
    topic: usize,
    n: usize,
) -> Vec<(String, f64)> {
    let row = &matrix.weights[topic];
    top_indices(row, n)
        .into_iter()
        .map(|i| (String::from(vocabulary.term(i)), row[i]))
        .collect()
}

/// Inputs a [`TopicModel`] is derived from.
#[derive(Debug, Clone, Copy)]
pub struct TopicContext<'a> {
    pub documents: &'a [Document],
    pub vocabulary: &'a Vocabulary,
    /// Space the topic centroids are taken in.
    pub embeddings: &'a EmbeddingMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    /// Topic per document, [`NOISE`] for outliers.
    pub assignments: Vec<i32>,
    /// Documents per topic; topic 0 is the largest.
    pub counts: Vec<usize>,
    pub ctfidf: CtfidfMatrix,
    /// Centroid of each topic's member embeddings.
    pub topic_embeddings: Vec<Vec<f64>>,
}

impl TopicModel {
    /// Builds a model from cluster labels, renumbering topics by descending size
    /// (ties keep the original label order).
    pub fn build(ctx: TopicContext<'_>, labels: &[i32]) -> Result<Self, TopicError> {
        if labels.len() != ctx.documents.len() {
            return Err(TopicError::LengthMismatch {
                assignments: labels.len(),
                documents: ctx.documents.len(),
            });
        }
        let mut sizes: BTreeMap<i32, usize> = BTreeMap::new();
        for &l in labels.iter().filter(|&&l| l != NOISE) {
            *sizes.entry(l).or_insert(0) += 1;
        }
        let mut order: Vec<(i32, usize)> = sizes.into_iter().collect();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let remap: BTreeMap<i32, i32> = order
            .iter()
            .enumerate()
            .map(|(new, &(old, _))| (old, new as i32))
            .collect();
        let assignments: Vec<i32> = labels
            .iter()
            .map(|l| remap.get(l).copied().unwrap_or(NOISE))
            .collect();
        let counts: Vec<usize> = order.iter().map(|&(_, c)| c).collect();

        if counts.is_empty() {
            return Ok(TopicModel {
                assignments,
                counts,
                ctfidf: CtfidfMatrix::empty(ctx.vocabulary.len()),
                topic_embeddings: Vec::new(),
            });
        }
        let ctfidf = ctfidf(ctx.documents, &assignments, ctx.vocabulary)?;
        let topic_embeddings = centroids(ctx.embeddings, &assignments, counts.len());
        Ok(TopicModel {
            assignments,
            counts,
            ctfidf,
            topic_embeddings,
        })
    }

    pub fn n_topics(&self) -> usize {
        self.counts.len()
    }

    /// Document indices assigned to `topic`, in corpus order.
    pub fn members(&self, topic: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == topic as i32)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn noise_count(&self) -> usize {
        self.assignments.iter().filter(|&&a| a == NOISE).count()
    }
}

fn centroids(embeddings: &EmbeddingMatrix, assignments: &[i32], t: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; embeddings.dim()]; t];
    let mut sizes = vec![0usize; t];
    for (row, &a) in embeddings.rows().zip(assignments) {
        if a == NOISE {
            continue;
        }
        let a = a as usize;
        sizes[a] += 1;
        sums[a].iter_mut().zip(row).for_each(|(s, x)| *s += x);
    }
    for (sum, &size) in sums.iter_mut().zip(&sizes) {
        sum.iter_mut().for_each(|s| *s /= size as f64);
    }
    sums
}

/// Merges the smallest topic into its most similar one (cosine of c-TF-IDF
/// rows) until at most `max_topics` remain. A model already within the cap is
/// returned unchanged.
pub fn reduce_topics(
    model: &TopicModel,
    ctx: TopicContext<'_>,
    max_topics: usize,
) -> Result<TopicModel, TopicError> {
    let max_topics = max_topics.max(1);
    let mut current = model.clone();
    while current.n_topics() > max_topics {
        let t = current.n_topics();
        // smallest count; ties go to the later (higher) id
        let smallest = (0..t)
            .rev()
            .min_by_key(|&i| current.counts[i])
            .expect("at least two topics");
        let source = &current.ctfidf.weights[smallest];
        let mut target = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for j in (0..t).filter(|&j| j != smallest) {
            let sim = cosine(source, &current.ctfidf.weights[j]).unwrap_or(-1.0);
            if sim > best {
                best = sim;
                target = j;
            }
        }
        let merged: Vec<i32> = current
            .assignments
            .iter()
            .map(|&a| if a == smallest as i32 { target as i32 } else { a })
            .collect();
        current = TopicModel::build(ctx, &merged)?;
    }
    Ok(current)
}

fn cosine_matrix(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, TopicError> {
    if let Some(bad) = rows.iter().position(|r| norm(r) == 0.0) {
        return Err(TopicError::ZeroNormEmbedding(bad));
    }
    let t = rows.len();
    let mut out = vec![vec![0.0; t]; t];
    for i in 0..t {
        out[i][i] = 1.0;
        for j in i + 1..t {
            let s = cosine(&rows[i], &rows[j]).expect("norms checked");
            out[i][j] = s;
            out[j][i] = s;
        }
    }
    Ok(out)
}

/// Cosine similarity between topic embeddings.
pub fn topic_similarity(model: &TopicModel) -> Result<Vec<Vec<f64>>, TopicError> {
    cosine_matrix(&model.topic_embeddings)
}

/// Cosine similarity between c-TF-IDF rows instead of embeddings.
pub fn ctfidf_similarity(model: &TopicModel) -> Result<Vec<Vec<f64>>, TopicError> {
    cosine_matrix(&model.ctfidf.weights)
}
