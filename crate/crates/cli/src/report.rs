//! Text summary of a finished run directory.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use crate::pipeline::{SIGNALS, TOPICS};

#[derive(Debug, Deserialize)]
struct TopicLine {
    topic_id: usize,
    label: String,
    count: usize,
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    if !path.is_file() {
        bail!("missing file {}", path.display());
    }
    csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))
}

/// Topic table sorted by document count (largest first) with each topic's
/// signal class per period.
pub fn report_summary(dir: &Path) -> Result<String> {
    let topics_path = dir.join(TOPICS);
    let signals_path = dir.join(SIGNALS);
    let mut topics: Vec<TopicLine> = open(&topics_path)?
        .deserialize()
        .collect::<Result<_, _>>()
        .with_context(|| format!("parsing {}", topics_path.display()))?;
    let mut reader = open(&signals_path)?;
    let periods: Vec<String> = reader.headers()?.iter().skip(1).map(String::from).collect();
    let mut classes = std::collections::BTreeMap::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("parsing {}", signals_path.display()))?;
        let id: usize = record
            .get(0)
            .unwrap_or_default()
            .parse()
            .with_context(|| format!("bad topic id in {}", signals_path.display()))?;
        classes.insert(id, record.iter().skip(1).map(String::from).collect::<Vec<_>>());
    }
    topics.sort_by(|a, b| b.count.cmp(&a.count).then(a.topic_id.cmp(&b.topic_id)));

    let label_width = topics.iter().map(|t| t.label.chars().count()).max().unwrap_or(0).max(5);
    let mut s = String::new();
    write!(s, "{:>5}  {:<label_width$}  {:>6}", "topic", "label", "count")?;
    for p in &periods {
        write!(s, "  {p:>9}")?;
    }
    s.push('\n');
    for t in &topics {
        write!(s, "{:>5}  {:<label_width$}  {:>6}", t.topic_id, t.label, t.count)?;
        let row = classes.get(&t.topic_id);
        for i in 0..periods.len() {
            let c = row.and_then(|r| r.get(i)).map_or("none", String::as_str);
            write!(s, "  {c:>9}")?;
        }
        s.push('\n');
    }
    if topics.is_empty() {
        s.push_str("warning: no topics found; every document was classified as noise\n");
    }
    Ok(s)
}
