use std::collections::{BTreeMap, BTreeSet};

use signalscope_core::corpus::Document;

pub fn doc(tokens: &[&str]) -> Document {
    Document {
        id: String::new(),
        tokens: tokens.iter().map(|t| t.to_string()).collect(),
        year: 2020,
    }
}

/// Term occurrences of one document: every token and every adjacent pair.
pub fn occurrences(doc: &Document) -> Vec<String> {
    let mut out = doc.tokens.clone();
    out.extend(doc.tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

/// W[c][term] straight from the definition, or None when a class is empty.
pub fn brute_force(
    docs: &[Document],
    labels: &[i32],
    terms: &BTreeSet<String>,
) -> Option<Vec<BTreeMap<String, f64>>> {
    let classes = labels.iter().copied().max().unwrap() as usize + 1;
    let mut counts = vec![BTreeMap::<String, f64>::new(); classes];
    for (d, &l) in docs.iter().zip(labels) {
        if l < 0 {
            continue;
        }
        for occ in occurrences(d) {
            if terms.contains(&occ) {
                *counts[l as usize].entry(occ).or_default() += 1.0;
            }
        }
    }
    let totals: Vec<f64> = counts.iter().map(|c| c.values().sum()).collect();
    if totals.contains(&0.0) {
        return None;
    }
    let a = totals.iter().sum::<f64>() / classes as f64;
    let f = |t: &str| counts.iter().map(|c| c.get(t).copied().unwrap_or(0.0)).sum::<f64>();
    Some(
        counts
            .iter()
            .zip(&totals)
            .map(|(c, total)| {
                terms
                    .iter()
                    .map(|t| {
                        let n = c.get(t).copied().unwrap_or(0.0);
                        let w = if n == 0.0 { 0.0 } else { n / total * (1.0 + a / f(t)).ln() };
                        (t.clone(), w)
                    })
                    .collect()
            })
            .collect(),
    )
}
