//! File formats: newline-delimited JSON corpora, embeddings and artifacts.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use signalscope_core::corpus::{RawRecord, Stoplist};
use signalscope_core::embedding::{EmbeddingError, EmbeddingMatrix};

#[derive(Debug, Deserialize)]
struct RecordLine {
    id: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default, rename = "abstract")]
    abstract_: Option<String>,
    year: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOut<'a> {
    pub id: &'a str,
    pub title: &'a str,
    #[serde(rename = "abstract")]
    pub abstract_: &'a str,
    pub year: i32,
}

fn lines(path: &Path) -> Result<impl Iterator<Item = (usize, String)>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out.into_iter())
}

/// Reads a corpus; `title` and `abstract` may be absent or null (treated as empty).
pub fn read_corpus(path: &Path) -> Result<Vec<RawRecord>> {
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for (n, line) in lines(path)? {
        let r: RecordLine = serde_json::from_str(&line)
            .with_context(|| format!("{}:{n}: invalid record", path.display()))?;
        if !seen.insert(r.id.clone()) {
            bail!("{}:{n}: duplicate record id {:?}", path.display(), r.id);
        }
        records.push(RawRecord {
            id: r.id,
            title: r.title.unwrap_or_default(),
            r#abstract: r.abstract_.unwrap_or_default(),
            year: r.year,
        });
    }
    Ok(records)
}

pub fn write_corpus(path: &Path, records: &[RawRecord]) -> Result<()> {
    write_jsonl(
        path,
        records.iter().map(|r| RecordOut {
            id: &r.id,
            title: &r.title,
            abstract_: &r.r#abstract,
            year: r.year,
        }),
    )
}

pub fn read_stoplist(path: &Path) -> Result<Stoplist> {
    let text = fs::read_to_string(path).with_context(|| format!("reading stoplist {}", path.display()))?;
    Ok(Stoplist::parse(&text))
}

/// One vector component as it may appear in the file. Non-numeric spellings
/// of NaN and infinity are accepted so they can be reported as such.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Component {
    Number(f64),
    Other(serde::de::IgnoredAny),
}

#[derive(Debug, Deserialize)]
struct VectorLine {
    id: String,
    vector: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorRow {
    pub id: String,
    pub vector: Vec<f64>,
}

fn parse_vector_line(line: &str) -> serde_json::Result<VectorLine> {
    match serde_json::from_str(line) {
        Ok(v) => Ok(v),
        // bare NaN / Infinity tokens as written by some JSON encoders
        Err(e) => match line.find("\"vector\"") {
            Some(at) if line[at..].contains("NaN") || line[at..].contains("Infinity") => {
                let tail = line[at..].replace("-Infinity", "null").replace("Infinity", "null").replace("NaN", "null");
                serde_json::from_str(&format!("{}{}", &line[..at], tail)).map_err(|_| e)
            }
            _ => Err(e),
        },
    }
}

/// Loads `{"id", "vector"}` lines and orders rows to match `expected_ids`.
pub fn load_embeddings(path: &Path, expected_ids: &[String]) -> Result<EmbeddingMatrix> {
    let mut entries = Vec::new();
    for (n, line) in lines(path)? {
        let v = parse_vector_line(&line).with_context(|| format!("{}:{n}: invalid embedding line", path.display()))?;
        let mut vector = Vec::with_capacity(v.vector.len());
        for (position, c) in v.vector.into_iter().enumerate() {
            match c {
                Component::Number(x) if x.is_finite() => vector.push(x),
                _ => return Err(EmbeddingError::NonFinite { id: v.id, position }.into()),
            }
        }
        entries.push((v.id, vector));
    }
    Ok(EmbeddingMatrix::aligned(entries, expected_ids)?)
}

pub fn write_jsonl<T: Serialize, I: IntoIterator<Item = T>>(path: &Path, rows: I) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.is_file() {
        bail!("missing artifact {}", path.display());
    }
    lines(path)?
        .map(|(n, line)| serde_json::from_str(&line).with_context(|| format!("{}:{n}: invalid line", path.display())))
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("missing artifact {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}
