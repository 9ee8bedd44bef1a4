//! Topic labels: a deterministic heuristic from top c-TF-IDF terms, or a
//! headline service queried over several sampled rounds whose answers are
//! reduced to one label by a Jaccard medoid.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::stats::mix64;
use crate::topics::{top_terms, TopicModel, Vocabulary};

pub const DEFAULT_LABEL_TERMS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelError {
    #[error("topic {0} does not exist")]
    UnknownTopic(usize),
    #[error("topic {0} has no documents")]
    EmptyTopic(usize),
    #[error("{0} texts supplied for a corpus of {1} documents")]
    TextCount(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelerConfig {
    /// Documents per round.
    pub sample_size: usize,
    /// Rounds per topic.
    pub repetitions: usize,
    /// Whitespace-token budget of one request.
    pub max_request_tokens: usize,
    pub seed: u64,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        LabelerConfig {
            sample_size: 5,
            repetitions: 15,
            max_request_tokens: 512,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    Heuristic,
    External,
}

impl LabelSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelSource::Heuristic => "heuristic",
            LabelSource::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicLabel {
    pub topic: usize,
    pub label: String,
    /// One entry per successful round (external), or the single heuristic label.
    pub candidates: Vec<String>,
    pub source: LabelSource,
    pub failed_rounds: usize,
}

fn title_case(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Top `n_terms` c-TF-IDF terms, words title-cased, repeated words dropped.
pub fn heuristic_label(
    model: &TopicModel,
    vocabulary: &Vocabulary,
    topic: usize,
    n_terms: usize,
) -> Result<TopicLabel, LabelError> {
    if topic >= model.n_topics() {
        return Err(LabelError::UnknownTopic(topic));
    }
    let terms: Vec<String> = top_terms(&model.ctfidf, vocabulary, topic, n_terms)
        .into_iter()
        .map(|(t, _)| t)
        .collect();
    let label = label_from_terms(terms.iter().map(String::as_str));
    Ok(TopicLabel {
        topic,
        candidates: alloc::vec![label.clone()],
        label,
        source: LabelSource::Heuristic,
        failed_rounds: 0,
    })
}

/// Joins terms into a title-cased label, keeping the first occurrence of each word.
pub fn label_from_terms<'a, I: IntoIterator<Item = &'a str>>(terms: I) -> String {
    let mut seen = BTreeSet::new();
    let mut words = Vec::new();
    for term in terms {
        for word in term.split_whitespace() {
            if seen.insert(word) {
                words.push(title_case(word));
            }
        }
    }
    words.join(" ")
}

/// Seeded sample of a topic's documents for one labeling round.
///
/// Returns corpus indices, all members when the topic is smaller than the
/// sample size. The same `(seed, topic, round)` always yields the same sample.
pub fn sample_documents(
    model: &TopicModel,
    topic: usize,
    config: &LabelerConfig,
    round: usize,
) -> Result<Vec<usize>, LabelError> {
    if topic >= model.n_topics() {
        return Err(LabelError::UnknownTopic(topic));
    }
    let members = model.members(topic);
    if members.is_empty() {
        return Err(LabelError::EmptyTopic(topic));
    }
    if members.len() <= config.sample_size {
        return Ok(members);
    }
    let seed = mix64(mix64(mix64(config.seed) ^ topic as u64) ^ round as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, members.len(), config.sample_size)
        .into_iter()
        .map(|i| members[i])
        .collect())
}

/// Cuts texts to a shared whitespace-token budget without splitting tokens.
///
/// The budget is split evenly; budget a short text cannot use passes to the
/// following texts in order. Kept tokens are re-joined with single spaces.
pub fn truncate_texts<S: AsRef<str>>(texts: &[S], max_tokens: usize) -> Vec<String> {
    let tokens: Vec<Vec<&str>> = texts
        .iter()
        .map(|t| t.as_ref().split_whitespace().collect())
        .collect();
    let mut quota = alloc::vec![0usize; tokens.len()];
    let mut remaining = max_tokens;
    // water-filling: repeat even splits until the budget or the texts run out
    loop {
        let open: Vec<usize> = (0..tokens.len()).filter(|&i| quota[i] < tokens[i].len()).collect();
        if open.is_empty() || remaining == 0 {
            break;
        }
        let share = (remaining / open.len()).max(1);
        for i in open {
            if remaining == 0 {
                break;
            }
            let add = share.min(tokens[i].len() - quota[i]).min(remaining);
            quota[i] += add;
            remaining -= add;
        }
    }
    tokens
        .iter()
        .zip(&quota)
        .map(|(t, &q)| t[..q].join(" "))
        .collect()
}

/// One request to a headline service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRequest {
    pub topic_id: usize,
    pub documents: Vec<String>,
    pub max_tokens: usize,
}

/// A round-level failure reported by a headline service.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ServiceError(pub String);

/// Remote (or mocked) headline generator.
pub trait HeadlineService {
    fn headline(&self, request: &LabelRequest) -> Result<String, ServiceError>;
}

/// Runs `config.repetitions` sampled rounds against `service` and aggregates
/// the answers. Failed rounds are skipped and counted; when every round fails
/// the heuristic label is returned instead.
///
/// `texts[i]` is the full text of corpus document `i`.
pub fn external_label<S: HeadlineService + ?Sized, T: AsRef<str>>(
    service: &S,
    model: &TopicModel,
    vocabulary: &Vocabulary,
    topic: usize,
    texts: &[T],
    config: &LabelerConfig,
) -> Result<TopicLabel, LabelError> {
    if texts.len() != model.assignments.len() {
        return Err(LabelError::TextCount(texts.len(), model.assignments.len()));
    }
    let mut candidates = Vec::with_capacity(config.repetitions);
    let mut failed = 0;
    for round in 0..config.repetitions {
        let sample = sample_documents(model, topic, config, round)?;
        let chosen: Vec<&str> = sample.iter().map(|&i| texts[i].as_ref()).collect();
        let request = LabelRequest {
            topic_id: topic,
            documents: truncate_texts(&chosen, config.max_request_tokens),
            max_tokens: config.max_request_tokens,
        };
        match service.headline(&request) {
            Ok(label) => candidates.push(label),
            Err(_) => failed += 1,
        }
    }
    match aggregate_labels(&candidates) {
        Some(label) => Ok(TopicLabel {
            topic,
            label,
            candidates,
            source: LabelSource::External,
            failed_rounds: failed,
        }),
        None => {
            let mut fallback = heuristic_label(model, vocabulary, topic, DEFAULT_LABEL_TERMS)?;
            fallback.failed_rounds = failed;
            Ok(fallback)
        }
    }
}

fn token_set(label: &str) -> BTreeSet<String> {
    label.split_whitespace().map(|w| w.to_lowercase()).collect()
}

/// Token-level Jaccard similarity of two labels (case-insensitive).
pub fn jaccard(a: &str, b: &str) -> f64 {
    let (a, b) = (token_set(a), token_set(b));
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// The candidate with the highest mean Jaccard similarity to the others;
/// ties go to the earliest. `None` for an empty list.
pub fn aggregate_labels<S: AsRef<str>>(candidates: &[S]) -> Option<String> {
    match candidates.len() {
        0 => return None,
        1 => return Some(candidates[0].as_ref().to_string()),
        _ => {}
    }
    let sets: Vec<BTreeSet<String>> = candidates.iter().map(|c| token_set(c.as_ref())).collect();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for i in 0..sets.len() {
        let mut total = 0.0;
        for j in (0..sets.len()).filter(|&j| j != i) {
            let union = sets[i].union(&sets[j]).count();
            total += if union == 0 {
                1.0
            } else {
                sets[i].intersection(&sets[j]).count() as f64 / union as f64
            };
        }
        let score = total / (sets.len() - 1) as f64;
        // near-equal sums are ties; the earliest candidate keeps them
        if score > best_score + 1e-12 {
            best_score = score;
            best = i;
        }
    }
    Some(candidates[best].as_ref().to_string())
}
