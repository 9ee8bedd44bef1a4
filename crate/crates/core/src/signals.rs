//! Topic emergence maps (TEMs) and signal classification.
//!
//! A TEM places each topic present in a period at `x` = mean yearly
//! proportion and `y` = growth rate. The map is split at the mean `x` of its
//! points and at `y = 0`:
//!
//! | quadrant               | class  |
//! |------------------------|--------|
//! | `x >= mean`, `y > 0`   | strong |
//! | `x < mean`,  `y > 0`   | weak   |
//! | `x < mean`,  `y <= 0`  | latent |
//! | `x >= mean`, `y <= 0`  | NSWK (not strong but well-known) |

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::corpus::Period;
use crate::dynamics::{ols_trend, TimeSeries};
use crate::fmath::abs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SignalClass {
    Weak,
    Strong,
    Latent,
    Nswk,
    /// Topic absent from the period.
    NoSignal,
}

impl SignalClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignalClass::Weak => "weak",
            SignalClass::Strong => "strong",
            SignalClass::Latent => "latent",
            SignalClass::Nswk => "nswk",
            SignalClass::NoSignal => "none",
        }
    }
}

impl fmt::Display for SignalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown signal class {0:?}")]
pub struct UnknownSignalClass(pub alloc::string::String);

impl FromStr for SignalClass {
    type Err = UnknownSignalClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "weak" => SignalClass::Weak,
            "strong" => SignalClass::Strong,
            "latent" => SignalClass::Latent,
            "nswk" => SignalClass::Nswk,
            "none" => SignalClass::NoSignal,
            other => return Err(UnknownSignalClass(other.into())),
        })
    }
}

/// How the y axis of a TEM is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GrowthMethod {
    /// Mean year-over-year relative change; a rise from zero counts as +1 and
    /// zero-to-zero pairs are skipped.
    #[default]
    RelativeChange,
    /// OLS slope of the yearly proportions (needs at least 3 years).
    OlsSlope,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemPoint {
    pub topic: usize,
    pub avg_proportion: f64,
    pub growth_rate: f64,
    pub doc_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemMap {
    pub period: Period,
    pub points: Vec<TemPoint>,
    pub x_threshold: f64,
    pub classes: Vec<SignalClass>,
}

impl TemMap {
    pub fn class_of(&self, topic: usize) -> SignalClass {
        self.points
            .iter()
            .position(|p| p.topic == topic)
            .map_or(SignalClass::NoSignal, |i| self.classes[i])
    }
}

fn growth(values: &[f64], method: GrowthMethod) -> f64 {
    match method {
        GrowthMethod::RelativeChange => {
            let mut sum = 0.0;
            let mut pairs = 0usize;
            for w in values.windows(2) {
                let (prev, next) = (w[0], w[1]);
                if prev > 0.0 {
                    sum += (next - prev) / prev;
                    pairs += 1;
                } else if next > 0.0 {
                    sum += 1.0;
                    pairs += 1;
                }
            }
            if pairs == 0 {
                0.0
            } else {
                sum / pairs as f64
            }
        }
        GrowthMethod::OlsSlope => {
            let x: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
            ols_trend(&x, values).map_or(0.0, |fit| fit.slope)
        }
    }
}

/// TEM coordinates of every topic with at least one document in `period`.
pub fn period_metrics(series: &[TimeSeries], period: Period, method: GrowthMethod) -> Vec<TemPoint> {
    let mut points = Vec::new();
    for s in series {
        let idx: Vec<usize> = (0..s.years.len())
            .filter(|&i| period.contains(s.years[i]))
            .collect();
        let doc_count: usize = idx.iter().map(|&i| s.counts[i]).sum();
        if doc_count == 0 {
            continue;
        }
        let values: Vec<f64> = idx.iter().map(|&i| s.proportions[i]).collect();
        points.push(TemPoint {
            topic: s.topic,
            avg_proportion: values.iter().sum::<f64>() / values.len() as f64,
            growth_rate: growth(&values, method),
            doc_count,
        });
    }
    points
}

/// Quadrant of one point. `x` equal to the threshold counts as high, `y = 0`
/// as non-positive.
pub fn quadrant(x: f64, y: f64, x_threshold: f64) -> SignalClass {
    // absorb rounding in the mean so that x == mean(x) lands on the high side
    let high = x >= x_threshold - 1e-12 * abs(x_threshold);
    match (high, y > 0.0) {
        (true, true) => SignalClass::Strong,
        (false, true) => SignalClass::Weak,
        (false, false) => SignalClass::Latent,
        (true, false) => SignalClass::Nswk,
    }
}

/// Mean-x threshold and class of every point.
pub fn classify(points: &[TemPoint]) -> (f64, Vec<SignalClass>) {
    if points.is_empty() {
        return (0.0, Vec::new());
    }
    let threshold = points.iter().map(|p| p.avg_proportion).sum::<f64>() / points.len() as f64;
    let classes = points
        .iter()
        .map(|p| quadrant(p.avg_proportion, p.growth_rate, threshold))
        .collect();
    (threshold, classes)
}

pub fn build_tem(series: &[TimeSeries], period: Period, method: GrowthMethod) -> TemMap {
    let points = period_metrics(series, period, method);
    let (x_threshold, classes) = classify(&points);
    TemMap {
        period,
        points,
        x_threshold,
        classes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub topic: usize,
    /// Index of the earlier period.
    pub period: usize,
    pub from: SignalClass,
    pub to: SignalClass,
}

/// Topic-by-period signal classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalEvolution {
    pub periods: Vec<Period>,
    /// `matrix[topic][period]`.
    pub matrix: Vec<Vec<SignalClass>>,
}

impl SignalEvolution {
    /// Class changes between consecutive periods.
    pub fn transitions(&self) -> Vec<Transition> {
        let mut out = Vec::new();
        for (topic, row) in self.matrix.iter().enumerate() {
            for (period, w) in row.windows(2).enumerate() {
                if w[0] != w[1] {
                    out.push(Transition {
                        topic,
                        period,
                        from: w[0],
                        to: w[1],
                    });
                }
            }
        }
        out
    }

    pub fn transitions_between(&self, from: SignalClass, to: SignalClass) -> Vec<Transition> {
        self.transitions()
            .into_iter()
            .filter(|t| t.from == from && t.to == to)
            .collect()
    }

    /// Topics holding `class` in at least `run` consecutive periods.
    pub fn consecutive(&self, class: SignalClass, run: usize) -> Vec<usize> {
        self.matrix
            .iter()
            .enumerate()
            .filter(|(_, row)| {
                let mut streak = 0;
                row.iter().any(|&c| {
                    streak = if c == class { streak + 1 } else { 0 };
                    streak >= run
                })
            })
            .map(|(t, _)| t)
            .collect()
    }
}

/// Signal matrix over topics `0..n_topics`; topics missing from a map get
/// [`SignalClass::NoSignal`] for that period.
pub fn evolution_matrix(maps: &[TemMap], n_topics: usize) -> SignalEvolution {
    let matrix = (0..n_topics)
        .map(|topic| maps.iter().map(|m| m.class_of(topic)).collect())
        .collect();
    SignalEvolution {
        periods: maps.iter().map(|m| m.period).collect(),
        matrix,
    }
}
