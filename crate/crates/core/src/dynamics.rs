//! Topic dynamics over time: yearly proportions, per-year keywords, OLS trend
//! lines with 95% bands, and peak detection.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::clustering::NOISE;
use crate::corpus::Document;
use crate::fmath::sqrt;
use crate::stats::student_t_quantile;
use crate::topics::{class_counts, top_indices, weigh, CtfidfMatrix, TopicModel, Vocabulary};

pub const DEFAULT_MAX_PEAKS: usize = 3;
pub const SLICE_TOP_TERMS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrendError {
    #[error("trend fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("all points share the same x value")]
    ZeroVariance,
    #[error("{x} x values but {y} y values")]
    LengthMismatch { x: usize, y: usize },
}

/// Yearly document share of one topic.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub topic: usize,
    pub years: Vec<i32>,
    pub proportions: Vec<f64>,
    /// Topic documents per year.
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearlyProportions {
    pub series: Vec<TimeSeries>,
    /// Years without any non-noise document; every proportion there is 0.
    pub empty_years: Vec<i32>,
}

/// Share of each year's non-noise documents held by each topic.
///
/// Documents outside `span` are ignored.
pub fn yearly_proportions(
    model: &TopicModel,
    documents: &[Document],
    span: RangeInclusive<i32>,
) -> YearlyProportions {
    let years: Vec<i32> = span.clone().collect();
    let t = model.n_topics();
    let mut counts = vec![vec![0usize; years.len()]; t];
    let mut totals = vec![0usize; years.len()];
    for (doc, &a) in documents.iter().zip(&model.assignments) {
        if a == NOISE || !span.contains(&doc.year) {
            continue;
        }
        let y = (doc.year - span.start()) as usize;
        counts[a as usize][y] += 1;
        totals[y] += 1;
    }
    let empty_years = years
        .iter()
        .zip(&totals)
        .filter(|(_, &n)| n == 0)
        .map(|(&y, _)| y)
        .collect();
    let series = counts
        .into_iter()
        .enumerate()
        .map(|(topic, c)| TimeSeries {
            topic,
            years: years.clone(),
            proportions: c
                .iter()
                .zip(&totals)
                .map(|(&k, &n)| if n == 0 { 0.0 } else { k as f64 / n as f64 })
                .collect(),
            counts: c,
        })
        .collect();
    YearlyProportions {
        series,
        empty_years,
    }
}

/// How the inverse-frequency factor is computed for per-year keywords.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SliceIdf {
    /// Corpus-wide `f(t)` and `A`; only term frequency is slice-local.
    #[default]
    Global,
    /// `f(t)` and `A` recomputed over the slices of each year.
    Local,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceTerms {
    pub topic: usize,
    pub year: i32,
    pub terms: Vec<(String, f64)>,
}

/// Top terms per (topic, year) slice; slices without documents are omitted.
/// Output is ordered by topic, then year.
pub fn time_sliced_ctfidf(
    documents: &[Document],
    assignments: &[i32],
    vocabulary: &Vocabulary,
    global: &CtfidfMatrix,
    idf: SliceIdf,
    n_terms: usize,
) -> Vec<SliceTerms> {
    let t = global.n_topics();
    let mut years: Vec<i32> = documents.iter().map(|d| d.year).collect();
    years.sort_unstable();
    years.dedup();

    let mut out = Vec::new();
    for &year in &years {
        let groups = documents
            .iter()
            .zip(assignments)
            .filter(|(d, &a)| a != NOISE && d.year == year)
            .map(|(d, &a)| (a as usize, d));
        let mut present = vec![false; t];
        let groups: Vec<(usize, &Document)> = groups.inspect(|(a, _)| present[*a] = true).collect();
        let counts = class_counts(groups, t, vocabulary);
        let totals: Vec<f64> = counts.iter().map(|r| r.iter().sum()).collect();

        let (freq, avg) = match idf {
            SliceIdf::Global => (global.term_corpus_freq.clone(), global.avg_tokens_per_class),
            SliceIdf::Local => {
                let mut freq = vec![0.0; vocabulary.len()];
                for row in &counts {
                    freq.iter_mut().zip(row).for_each(|(f, c)| *f += c);
                }
                let live: Vec<f64> = totals.iter().copied().filter(|&s| s > 0.0).collect();
                let avg = live.iter().sum::<f64>() / live.len().max(1) as f64;
                (freq, avg)
            }
        };
        for topic in (0..t).filter(|&k| present[k]) {
            let terms = if totals[topic] > 0.0 {
                let w = weigh(&counts[topic], totals[topic], &freq, avg);
                top_indices(&w, n_terms)
                    .into_iter()
                    .map(|i| (String::from(vocabulary.term(i)), w[i]))
                    .collect()
            } else {
                Vec::new()
            };
            out.push(SliceTerms { topic, year, terms });
        }
    }
    out.sort_by_key(|s| (s.topic, s.year));
    out
}

/// Least-squares line with a 95% band for the mean response.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    pub fitted: Vec<f64>,
    pub ci_half_width: Vec<f64>,
}

/// Simple linear regression of `y` on `x`.
///
/// The half-width at `x` is `t(0.975, n-2) * s * sqrt(1/n + (x - mean)^2 / Sxx)`.
pub fn ols_trend(x: &[f64], y: &[f64]) -> Result<TrendFit, TrendError> {
    if x.len() != y.len() {
        return Err(TrendError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(TrendError::TooFewPoints(n));
    }
    let nf = n as f64;
    let x_mean = x.iter().sum::<f64>() / nf;
    let y_mean = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|xi| (xi - x_mean) * (xi - x_mean)).sum();
    if sxx == 0.0 {
        return Err(TrendError::ZeroVariance);
    }
    let sxy: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (xi - x_mean) * (yi - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let fitted: Vec<f64> = x.iter().map(|xi| y_mean + slope * (xi - x_mean)).collect();
    let sse: f64 = y.iter().zip(&fitted).map(|(yi, fi)| (yi - fi) * (yi - fi)).sum();
    let s = sqrt(sse / (nf - 2.0));
    let t = student_t_quantile(0.975, nf - 2.0);
    let ci_half_width = x
        .iter()
        .map(|xi| t * s * sqrt(1.0 / nf + (xi - x_mean) * (xi - x_mean) / sxx))
        .collect();
    Ok(TrendFit {
        slope,
        intercept,
        fitted,
        ci_half_width,
    })
}

pub fn series_trend(series: &TimeSeries) -> Result<TrendFit, TrendError> {
    let x: Vec<f64> = series.years.iter().map(|&y| f64::from(y)).collect();
    ols_trend(&x, &series.proportions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    pub topic: usize,
    /// `(year, value)`, most recent first.
    pub peaks: Vec<(i32, f64)>,
}

/// Strict local maxima, most recent first, at most `max_peaks`.
///
/// An endpoint is a peak when it strictly exceeds its one neighbor; a
/// single-point series has no neighbor and therefore no peak.
pub fn detect_peaks(years: &[i32], values: &[f64], max_peaks: usize) -> Vec<(i32, f64)> {
    let n = values.len();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    for i in (0..n).rev() {
        let left_ok = i == 0 || values[i] > values[i - 1];
        let right_ok = i + 1 == n || values[i] > values[i + 1];
        if left_ok && right_ok {
            out.push((years[i], values[i]));
            if out.len() == max_peaks {
                break;
            }
        }
    }
    out
}

pub fn series_peaks(series: &TimeSeries, max_peaks: usize) -> PeakSet {
    PeakSet {
        topic: series.topic,
        peaks: detect_peaks(&series.years, &series.proportions, max_peaks),
    }
}
