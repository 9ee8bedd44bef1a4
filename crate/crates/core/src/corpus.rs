//! Record ingestion, text normalization and period schemes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// One publication record as it arrives from the input corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub id: String,
    pub title: String,
    pub r#abstract: String,
    pub year: i32,
}

/// A normalized, tokenized publication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("period width must be at least 1, got {0}")]
    InvalidWidth(i32),
    #[error("period end year {end} precedes start year {start}")]
    InvertedSpan { start: i32, end: i32 },
    #[error("span {start}..={end} ({span} years) is not divisible by period width {width}")]
    NotDivisible {
        start: i32,
        end: i32,
        span: i32,
        width: i32,
    },
    #[error("empty corpus after filtering")]
    EmptyCorpus,
}

/// Words removed before topic modeling.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Stoplist {
    terms: BTreeSet<String>,
}

const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "aren", "as", "at", "be", "because", "been", "before", "being", "below", "between",
    "both", "but", "by", "can", "could", "couldn", "did", "didn", "do", "does", "doesn", "doing",
    "don", "down", "during", "each", "either", "etc", "few", "for", "from", "further", "had",
    "hadn", "has", "hasn", "have", "haven", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "however", "i", "if", "in", "into", "is", "isn", "it", "its",
    "itself", "just", "ll", "may", "me", "might", "more", "most", "must", "my", "myself", "no",
    "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
    "ourselves", "out", "over", "own", "per", "re", "same", "shall", "she", "should", "shouldn",
    "so", "some", "such", "than", "that", "the", "their", "theirs", "them", "themselves", "then",
    "there", "these", "they", "this", "those", "through", "thus", "to", "too", "under", "until",
    "up", "upon", "us", "ve", "very", "via", "was", "wasn", "we", "were", "weren", "what", "when",
    "where", "whether", "which", "while", "who", "whom", "why", "will", "with", "within",
    "without", "won", "would", "wouldn", "you", "your", "yours", "yourself", "yourselves",
    "among", "another", "every", "many", "much", "since", "though", "yet", "furthermore",
    "moreover", "therefore", "s", "t", "d", "m", "o", "y",
];

impl Stoplist {
    /// The bundled English function-word list.
    pub fn english() -> Self {
        DEFAULT_STOPWORDS.iter().copied().collect()
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Parses a stoplist file body: one term per line, blank lines ignored.
    pub fn parse(text: &str) -> Self {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.terms.contains(token)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }
}

impl<'a> FromIterator<&'a str> for Stoplist {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        Stoplist {
            terms: iter.into_iter().map(|t| t.to_lowercase()).collect(),
        }
    }
}

/// Token normalization stage applied after stopword removal.
pub trait Normalizer {
    fn normalize(&self, token: &str) -> String;
}

/// Rule-based suffix stripping used in place of a dictionary lemmatizer.
///
/// Rules are tried in order and the first match is applied; the result is fed
/// back through the rules until none matches, so the output is a fixed point.
///
/// 1. `ies` -> `y`
/// 2. `sses` -> `ss`
/// 3. trailing `s` (not `ss`) when more than three characters remain
/// 4. `ing`, then `ed`, when the remaining stem contains a vowel
///
/// A rule never leaves a stem ending in a hyphen.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuffixStripper;

impl SuffixStripper {
    fn step(word: &str) -> Option<String> {
        let stem_ok = |stem: &str| stem.chars().last().is_some_and(char::is_alphanumeric);
        if let Some(stem) = word.strip_suffix("ies") {
            if stem_ok(stem) {
                let mut out = String::from(stem);
                out.push('y');
                return Some(out);
            }
        }
        if let Some(stem) = word.strip_suffix("sses") {
            if stem_ok(stem) {
                let mut out = String::from(stem);
                out.push_str("ss");
                return Some(out);
            }
        }
        if !word.ends_with("ss") {
            if let Some(stem) = word.strip_suffix('s') {
                if stem.chars().count() > 3 && stem_ok(stem) {
                    return Some(String::from(stem));
                }
            }
        }
        for suffix in ["ing", "ed"] {
            if let Some(stem) = word.strip_suffix(suffix) {
                if stem_ok(stem) && stem.chars().any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')) {
                    return Some(String::from(stem));
                }
            }
        }
        None
    }
}

impl Normalizer for SuffixStripper {
    fn normalize(&self, token: &str) -> String {
        let mut current = String::from(token);
        // every rule shortens the word, so this terminates
        while let Some(next) = Self::step(&current) {
            current = next;
        }
        current
    }
}

/// Title, one space, abstract. An empty part is skipped.
pub fn merge_title_abstract(record: &RawRecord) -> String {
    match (record.title.is_empty(), record.r#abstract.is_empty()) {
        (true, _) => record.r#abstract.clone(),
        (_, true) => record.title.clone(),
        _ => {
            let mut out = String::with_capacity(record.title.len() + record.r#abstract.len() + 1);
            out.push_str(&record.title);
            out.push(' ');
            out.push_str(&record.r#abstract);
            out
        }
    }
}

/// Keeps records whose title and abstract are both non-blank, in input order.
pub fn filter_records(records: &[RawRecord]) -> Vec<RawRecord> {
    records
        .iter()
        .filter(|r| !r.title.trim().is_empty() && !r.r#abstract.trim().is_empty())
        .cloned()
        .collect()
}

fn is_pure_digits(token: &str) -> bool {
    token.chars().all(char::is_numeric)
}

/// Lowercase, strip punctuation, split, drop stopwords and numbers, normalize.
pub fn preprocess(text: &str, stoplist: &Stoplist) -> Vec<String> {
    preprocess_with(text, stoplist, &SuffixStripper)
}

pub fn preprocess_with(text: &str, stoplist: &Stoplist, normalizer: &dyn Normalizer) -> Vec<String> {
    let lowered: Vec<char> = text.to_lowercase().chars().collect();
    let mut cleaned = String::with_capacity(lowered.len());
    for (i, &c) in lowered.iter().enumerate() {
        let keep = if c == '-' {
            i > 0
                && i + 1 < lowered.len()
                && lowered[i - 1].is_alphanumeric()
                && lowered[i + 1].is_alphanumeric()
        } else {
            c.is_alphanumeric()
        };
        cleaned.push(if keep { c } else { ' ' });
    }

    let mut tokens = Vec::new();
    for raw in cleaned.split_whitespace() {
        if stoplist.contains(raw) || is_pure_digits(raw) {
            continue;
        }
        let token = normalizer.normalize(raw);
        if token.is_empty() || stoplist.contains(&token) || is_pure_digits(&token) {
            continue;
        }
        tokens.push(token);
    }
    tokens
}

/// Inclusive year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Period {
    pub lo: i32,
    pub hi: i32,
}

impl Period {
    pub fn contains(&self, year: i32) -> bool {
        self.lo <= year && year <= self.hi
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.lo..=self.hi
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Contiguous equal-width analysis periods covering `start_year..=end_year`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodScheme {
    pub start_year: i32,
    pub end_year: i32,
    pub width_years: i32,
    pub periods: Vec<Period>,
}

impl PeriodScheme {
    pub fn contains(&self, year: i32) -> bool {
        self.start_year <= year && year <= self.end_year
    }

    pub fn period_of(&self, year: i32) -> Option<usize> {
        if !self.contains(year) {
            return None;
        }
        Some(((year - self.start_year) / self.width_years) as usize)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start_year..=self.end_year
    }

    pub fn year_count(&self) -> usize {
        (self.end_year - self.start_year + 1) as usize
    }
}

pub fn build_periods(start_year: i32, end_year: i32, width: i32) -> Result<PeriodScheme, CorpusError> {
    if width < 1 {
        return Err(CorpusError::InvalidWidth(width));
    }
    if end_year < start_year {
        return Err(CorpusError::InvertedSpan {
            start: start_year,
            end: end_year,
        });
    }
    let span = end_year - start_year + 1;
    if span % width != 0 {
        return Err(CorpusError::NotDivisible {
            start: start_year,
            end: end_year,
            span,
            width,
        });
    }
    let periods = (0..span / width)
        .map(|i| Period {
            lo: start_year + i * width,
            hi: start_year + (i + 1) * width - 1,
        })
        .collect();
    Ok(PeriodScheme {
        start_year,
        end_year,
        width_years: width,
        periods,
    })
}

/// Counts gathered while turning raw records into documents.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub ingested: usize,
    pub missing_title_or_abstract: usize,
    pub out_of_span: usize,
    pub empty_after_preprocessing: usize,
    pub documents: usize,
    pub per_year: BTreeMap<i32, usize>,
}

/// Full ingestion: filter, drop out-of-span years, merge, preprocess.
///
/// Records whose token list comes out empty are dropped and counted.
pub fn prepare_documents(
    records: &[RawRecord],
    stoplist: &Stoplist,
    scheme: &PeriodScheme,
) -> Result<(Vec<Document>, CorpusStats), CorpusError> {
    let mut stats = CorpusStats {
        ingested: records.len(),
        ..CorpusStats::default()
    };
    let kept = filter_records(records);
    stats.missing_title_or_abstract = records.len() - kept.len();

    let mut documents = Vec::with_capacity(kept.len());
    for record in &kept {
        if !scheme.contains(record.year) {
            stats.out_of_span += 1;
            continue;
        }
        let tokens = preprocess(&merge_title_abstract(record), stoplist);
        if tokens.is_empty() {
            stats.empty_after_preprocessing += 1;
            continue;
        }
        *stats.per_year.entry(record.year).or_insert(0) += 1;
        documents.push(Document {
            id: record.id.clone(),
            tokens,
            year: record.year,
        });
    }
    stats.documents = documents.len();
    if documents.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok((documents, stats))
}
