//! Synthetic corpora with planted topics, used for benchmarks and tests.
//!
//! Each planted topic owns 30 pseudo-words; 10 more are shared background
//! words. Yearly volume follows one of four profiles, rotated across topics
//! from a seed-chosen offset so every profile appears once `k >= 4`.
//! Late-burst topics additionally plant one word that occurs only in their
//! burst-year documents.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Normalizer, RawRecord, Stoplist, SuffixStripper};

pub const TOPIC_TERMS: usize = 30;
pub const BACKGROUND_TERMS: usize = 10;
/// Occurrences of the burst word in each burst-year document.
pub const BURST_TERM_REPEATS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeProfile {
    Flat,
    Rising,
    Falling,
    LateBurst,
}

impl VolumeProfile {
    const ALL: [VolumeProfile; 4] = [
        VolumeProfile::Flat,
        VolumeProfile::Rising,
        VolumeProfile::Falling,
        VolumeProfile::LateBurst,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            VolumeProfile::Flat => "flat",
            VolumeProfile::Rising => "rising",
            VolumeProfile::Falling => "falling",
            VolumeProfile::LateBurst => "late-burst",
        }
    }

    fn weights(&self, n_years: usize) -> Vec<f64> {
        let span = (n_years.max(2) - 1) as f64;
        (0..n_years)
            .map(|i| match self {
                VolumeProfile::Flat => 1.0,
                VolumeProfile::Rising => 1.0 + 3.0 * i as f64 / span,
                VolumeProfile::Falling => 4.0 - 3.0 * i as f64 / span,
                VolumeProfile::LateBurst => {
                    if i + 2 == n_years {
                        8.0
                    } else {
                        1.0
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub k_topics: usize,
    pub docs_per_topic: usize,
    pub start_year: i32,
    pub end_year: i32,
    pub seed: u64,
    /// Abstract length in tokens.
    pub abstract_words: usize,
    pub title_words: usize,
    /// Chance that a token is a topic word rather than a background word.
    pub topic_word_share: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            k_topics: 5,
            docs_per_topic: 200,
            start_year: 2004,
            end_year: 2021,
            seed: 7,
            abstract_words: 60,
            title_words: 6,
            topic_word_share: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTopic {
    pub topic: usize,
    pub profile: VolumeProfile,
    pub terms: Vec<String>,
    /// Documents per year, `start_year` first.
    pub yearly_counts: Vec<usize>,
    /// `(year, word)` for late-burst topics.
    pub burst: Option<(i32, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub records: Vec<RawRecord>,
    /// Planted topic of each record.
    pub truth: Vec<usize>,
    pub topics: Vec<PlantedTopic>,
    pub background: Vec<String>,
}

/// Splits `total` across weights by largest remainder; remainder ties go to
/// later positions, so non-decreasing weights give non-decreasing counts.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| *e as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - counts[a] as f64;
        let fb = exact[b] - counts[b] as f64;
        fb.total_cmp(&fa).then(b.cmp(&a))
    });
    for &i in &order {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

const CONSONANTS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z"];
const VOWELS: &[&str] = &["a", "i", "o", "u"];

/// Distinct three-syllable pseudo-words that survive preprocessing unchanged.
fn pseudo_words(count: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let stop = Stoplist::english();
    let mut syllables: Vec<String> = CONSONANTS
        .iter()
        .flat_map(|c| VOWELS.iter().map(move |v| format!("{c}{v}")))
        .collect();
    syllables.shuffle(rng);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w: String = (0..3)
            .map(|_| syllables[rng.random_range(0..syllables.len())].as_str())
            .collect();
        if stop.contains(&w) || SuffixStripper.normalize(&w) != w || !seen.insert(w.clone()) {
            continue;
        }
        out.push(w);
    }
    out
}

fn sentence(words: &[&str]) -> String {
    let mut s = words.join(" ");
    if let Some(first) = s.get(0..1) {
        let upper = first.to_uppercase();
        s.replace_range(0..1, &upper);
    }
    s
}

pub fn synth_corpus(config: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_years = (config.end_year - config.start_year + 1).max(1) as usize;
    let k = config.k_topics;
    let burst_slots = k;
    let vocab = pseudo_words(k * TOPIC_TERMS + BACKGROUND_TERMS + burst_slots, &mut rng);
    let background: Vec<String> = vocab[k * TOPIC_TERMS..k * TOPIC_TERMS + BACKGROUND_TERMS].to_vec();
    let offset = rng.random_range(0..VolumeProfile::ALL.len());

    let topics: Vec<PlantedTopic> = (0..k)
        .map(|t| {
            let profile = VolumeProfile::ALL[(offset + t) % VolumeProfile::ALL.len()];
            let yearly_counts = apportion(config.docs_per_topic, &profile.weights(n_years));
            let burst = (profile == VolumeProfile::LateBurst && n_years >= 2).then(|| {
                (
                    config.end_year - 1,
                    vocab[k * TOPIC_TERMS + BACKGROUND_TERMS + t].clone(),
                )
            });
            PlantedTopic {
                topic: t,
                profile,
                terms: vocab[t * TOPIC_TERMS..(t + 1) * TOPIC_TERMS].to_vec(),
                yearly_counts,
                burst,
            }
        })
        .collect();

    let mut drafts: Vec<(RawRecord, usize)> = Vec::with_capacity(k * config.docs_per_topic);
    for topic in &topics {
        for (y, &count) in topic.yearly_counts.iter().enumerate() {
            let year = config.start_year + y as i32;
            for _ in 0..count {
                let mut draw = |n: usize| -> Vec<&str> {
                    (0..n)
                        .map(|_| {
                            if rng.random_bool(config.topic_word_share) {
                                topic.terms[rng.random_range(0..TOPIC_TERMS)].as_str()
                            } else {
                                background[rng.random_range(0..BACKGROUND_TERMS)].as_str()
                            }
                        })
                        .collect()
                };
                let title = draw(config.title_words);
                let mut body = draw(config.abstract_words);
                if let Some((burst_year, word)) = &topic.burst {
                    if *burst_year == year {
                        for _ in 0..BURST_TERM_REPEATS {
                            let at = rng.random_range(0..=body.len());
                            body.insert(at, word.as_str());
                        }
                    }
                }
                let record = RawRecord {
                    id: String::new(),
                    title: sentence(&title),
                    r#abstract: format!("{}.", sentence(&body)),
                    year,
                };
                drafts.push((record, topic.topic));
            }
        }
    }
    drafts.shuffle(&mut rng);

    let width = drafts.len().to_string().len().max(5);
    let mut records = Vec::with_capacity(drafts.len());
    let mut truth = Vec::with_capacity(drafts.len());
    for (i, (mut record, topic)) in drafts.into_iter().enumerate() {
        record.id = format!("doc-{i:0width$}");
        records.push(record);
        truth.push(topic);
    }
    SynthCorpus {
        records,
        truth,
        topics,
        background,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::preprocess;
    use alloc::vec;

    #[test]
    fn counts_and_groups() {
        let c = synth_corpus(&SynthConfig::default());
        assert_eq!(c.records.len(), 1000);
        let groups: BTreeSet<usize> = c.truth.iter().copied().collect();
        assert_eq!(groups.len(), 5);
        for t in &c.topics {
            assert_eq!(t.yearly_counts.iter().sum::<usize>(), 200);
            assert_eq!(t.yearly_counts.len(), 18);
        }
    }

    #[test]
    fn deterministic() {
        let a = synth_corpus(&SynthConfig::default());
        let b = synth_corpus(&SynthConfig::default());
        assert_eq!(a, b);
        let c = synth_corpus(&SynthConfig {
            seed: 8,
            ..SynthConfig::default()
        });
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn profile_shapes() {
        let c = synth_corpus(&SynthConfig::default());
        for t in &c.topics {
            let y = &t.yearly_counts;
            match t.profile {
                VolumeProfile::Rising => assert!(y.windows(2).all(|w| w[0] <= w[1]), "{y:?}"),
                VolumeProfile::Falling => assert!(y.windows(2).all(|w| w[0] >= w[1]), "{y:?}"),
                VolumeProfile::LateBurst => {
                    let peak = y.len() - 2;
                    assert!(y.iter().enumerate().all(|(i, &v)| i == peak || v < y[peak]));
                    assert_eq!(t.burst.as_ref().unwrap().0, 2020);
                }
                VolumeProfile::Flat => assert!(y.iter().max().unwrap() - y.iter().min().unwrap() <= 1),
            }
        }
        let profiles: BTreeSet<&str> = c.topics.iter().map(|t| t.profile.as_str()).collect();
        assert_eq!(profiles.len(), 4);
    }

    #[test]
    fn words_survive_preprocessing() {
        let c = synth_corpus(&SynthConfig::default());
        let r = &c.records[0];
        let tokens = preprocess(&r.title, &Stoplist::english());
        assert_eq!(tokens.len(), SynthConfig::default().title_words);
        assert_eq!(tokens.join(" "), r.title.to_lowercase());
    }

    #[test]
    fn apportion_rules() {
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![3, 3, 4]);
        assert_eq!(apportion(7, &[1.0, 2.0, 4.0]), vec![1, 2, 4]);
    }
}
