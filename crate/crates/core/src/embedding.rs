//! Document vectors: validation and alignment, the built-in TF-IDF embedder,
//! and PCA by deflated power iteration.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Document;
use crate::fmath::{abs, dot, ln, norm, sqrt};
use crate::stats::mix64;
use crate::topics::Vocabulary;

/// Output width of the built-in embedder's sign projection.
pub const BUILTIN_DIM: usize = 256;
pub const BUILTIN_SEED: u64 = 42;

pub const PCA_TOLERANCE: f64 = 1e-10;
pub const PCA_MAX_ITERATIONS: usize = 1000;
pub const DEFAULT_PCA_K: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("no embedding for document id {0:?}")]
    MissingId(String),
    #[error("duplicate embedding for document id {0:?}")]
    DuplicateId(String),
    #[error("embedding for {id:?} has width {got}, expected {expected}")]
    Ragged { id: String, expected: usize, got: usize },
    #[error("embedding for {id:?} has a non-finite value at position {position}")]
    NonFinite { id: String, position: usize },
    #[error("embeddings must have at least one column")]
    ZeroWidth,
    #[error("requested {k} components; must be between 1 and {max}")]
    ComponentsOutOfRange { k: usize, max: usize },
}

/// Row-aligned dense document vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Builds a matrix from rows already in the desired order.
    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, EmbeddingError> {
        let mut seen = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            if seen.insert(id.as_str(), i).is_some() {
                return Err(EmbeddingError::DuplicateId(id.clone()));
            }
        }
        assert_eq!(ids.len(), rows.len(), "one row per id");
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 && !rows.is_empty() {
            return Err(EmbeddingError::ZeroWidth);
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (id, row) in ids.iter().zip(&rows) {
            check_row(id, row, dim)?;
            data.extend_from_slice(row);
        }
        Ok(EmbeddingMatrix { ids, dim, data })
    }

    /// Reorders `(id, vector)` entries to follow `expected_ids` exactly.
    ///
    /// Entries for ids not in `expected_ids` are ignored.
    pub fn aligned(
        entries: Vec<(String, Vec<f64>)>,
        expected_ids: &[String],
    ) -> Result<Self, EmbeddingError> {
        let dim = entries.first().map_or(0, |(_, v)| v.len());
        if dim == 0 && !entries.is_empty() {
            return Err(EmbeddingError::ZeroWidth);
        }
        let mut by_id: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (id, vector) in entries {
            check_row(&id, &vector, dim)?;
            if by_id.contains_key(&id) {
                return Err(EmbeddingError::DuplicateId(id));
            }
            by_id.insert(id, vector);
        }
        let mut data = Vec::with_capacity(expected_ids.len() * dim);
        for id in expected_ids {
            let row = by_id
                .get(id)
                .ok_or_else(|| EmbeddingError::MissingId(id.clone()))?;
            data.extend_from_slice(row);
        }
        if dim == 0 && !expected_ids.is_empty() {
            return Err(EmbeddingError::MissingId(expected_ids[0].clone()));
        }
        Ok(EmbeddingMatrix {
            ids: expected_ids.to_vec(),
            dim,
            data,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.ids.len())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

fn check_row(id: &str, row: &[f64], dim: usize) -> Result<(), EmbeddingError> {
    if row.len() != dim {
        return Err(EmbeddingError::Ragged {
            id: id.into(),
            expected: dim,
            got: row.len(),
        });
    }
    if let Some(position) = row.iter().position(|v| !v.is_finite()) {
        return Err(EmbeddingError::NonFinite {
            id: id.into(),
            position,
        });
    }
    Ok(())
}

/// Output of [`builtin_embed`].
#[derive(Debug, Clone)]
pub struct BuiltinEmbedding {
    pub matrix: EmbeddingMatrix,
    /// Row indices that came out as the zero vector.
    pub zero_rows: Vec<usize>,
}

/// Sign bits of column `term` in the random projection, `BUILTIN_DIM` of them.
fn projection_signs(seed: u64, term: usize) -> [u64; BUILTIN_DIM / 64] {
    let base = mix64(seed ^ mix64(term as u64));
    let mut out = [0u64; BUILTIN_DIM / 64];
    for (i, word) in out.iter_mut().enumerate() {
        *word = mix64(base.wrapping_add(i as u64));
    }
    out
}

/// TF-IDF document vectors over `vocabulary`, L2-normalized.
///
/// When the vocabulary is wider than [`BUILTIN_DIM`], vectors are projected
/// through a seeded random +-1 matrix and re-normalized.
pub fn builtin_embed(documents: &[Document], vocabulary: &Vocabulary) -> BuiltinEmbedding {
    builtin_embed_seeded(documents, vocabulary, BUILTIN_SEED)
}

pub fn builtin_embed_seeded(
    documents: &[Document],
    vocabulary: &Vocabulary,
    seed: u64,
) -> BuiltinEmbedding {
    let n = documents.len() as f64;
    let idf: Vec<f64> = vocabulary
        .df()
        .iter()
        .map(|&df| if df == 0 { 0.0 } else { ln(n / df as f64) })
        .collect();
    let project = vocabulary.len() > BUILTIN_DIM;
    let dim = if project { BUILTIN_DIM } else { vocabulary.len() };
    let signs: Vec<[u64; BUILTIN_DIM / 64]> = if project {
        (0..vocabulary.len()).map(|t| projection_signs(seed, t)).collect()
    } else {
        Vec::new()
    };

    let mut ids = Vec::with_capacity(documents.len());
    let mut data = Vec::with_capacity(documents.len() * dim);
    let mut zero_rows = Vec::new();
    for (row_idx, doc) in documents.iter().enumerate() {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for term in vocabulary.term_ids(&doc.tokens) {
            *counts.entry(term).or_insert(0.0) += 1.0;
        }
        let mut row = vec![0.0; dim];
        for (&term, &count) in &counts {
            let w = count * idf[term];
            if w == 0.0 {
                continue;
            }
            if project {
                let bits = &signs[term];
                for (j, slot) in row.iter_mut().enumerate() {
                    let positive = (bits[j / 64] >> (j % 64)) & 1 == 1;
                    *slot += if positive { w } else { -w };
                }
            } else {
                row[term] += w;
            }
        }
        let len = norm(&row);
        if len > 0.0 {
            row.iter_mut().for_each(|v| *v /= len);
        } else {
            row.iter_mut().for_each(|v| *v = 0.0);
            zero_rows.push(row_idx);
        }
        ids.push(doc.id.clone());
        data.extend(row);
    }
    BuiltinEmbedding {
        matrix: EmbeddingMatrix { ids, dim, data },
        zero_rows,
    }
}

/// Fitted principal axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` rows of length `d`, pairwise orthonormal.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Total variance of the input (trace of the covariance).
    pub total_variance: f64,
}

impl PcaModel {
    pub fn transform(&self, m: &EmbeddingMatrix) -> EmbeddingMatrix {
        let k = self.components.len();
        let mut data = Vec::with_capacity(m.n_rows() * k);
        let mut centered = vec![0.0; m.dim()];
        for row in m.rows() {
            for ((c, x), mu) in centered.iter_mut().zip(row).zip(&self.mean) {
                *c = x - mu;
            }
            data.extend(self.components.iter().map(|axis| dot(axis, &centered)));
        }
        EmbeddingMatrix {
            ids: m.ids.clone(),
            dim: k,
            data,
        }
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes keep orthonormality near machine precision
    for _ in 0..2 {
        for b in basis {
            let p = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
}

fn sym_matvec(c: &[f64], d: usize, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&c[i * d..(i + 1) * d], v);
    }
}

/// Unit start vector orthogonal to `basis`: normalized all-ones, or the first
/// standard basis vector that survives orthogonalization.
fn start_vector(d: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    let mut v = vec![1.0 / sqrt(d as f64); d];
    orthogonalize(&mut v, basis);
    if norm(&v) > 1e-6 {
        let len = norm(&v);
        v.iter_mut().for_each(|x| *x /= len);
        return v;
    }
    let mut best: Option<Vec<f64>> = None;
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        orthogonalize(&mut e, basis);
        let len = norm(&e);
        if len > 0.5 {
            e.iter_mut().for_each(|x| *x /= len);
            return e;
        }
        if len > best.as_ref().map_or(0.0, |b| norm(b)) {
            best = Some(e);
        }
    }
    let mut e = best.expect("basis smaller than dimension");
    let len = norm(&e);
    e.iter_mut().for_each(|x| *x /= len);
    e
}

/// Makes the largest-magnitude entry positive.
fn fix_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if abs(*x) > abs(v[pivot]) + 1e-12 {
            pivot = i;
        }
    }
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Fits PCA with `k` components and projects the input onto them.
pub fn pca_fit_transform(
    m: &EmbeddingMatrix,
    k: usize,
) -> Result<(PcaModel, EmbeddingMatrix), EmbeddingError> {
    let model = pca_fit(m, k)?;
    let reduced = model.transform(m);
    Ok((model, reduced))
}

pub fn pca_fit(m: &EmbeddingMatrix, k: usize) -> Result<PcaModel, EmbeddingError> {
    let n = m.n_rows();
    let d = m.dim();
    let max = n.min(d);
    if k == 0 || k > max {
        return Err(EmbeddingError::ComponentsOutOfRange { k, max });
    }

    let mut mean = vec![0.0; d];
    for row in m.rows() {
        mean.iter_mut().zip(row).for_each(|(mu, x)| *mu += x);
    }
    mean.iter_mut().for_each(|mu| *mu /= n as f64);

    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for row in m.rows() {
        for ((c, x), mu) in centered.iter_mut().zip(row).zip(&mean) {
            *c = x - mu;
        }
        for i in 0..d {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let line = &mut cov[i * d..(i + 1) * d];
            for (slot, cj) in line.iter_mut().zip(&centered) {
                *slot += ci * cj;
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= denom);
    let total_variance: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let scale = total_variance.max(f64::MIN_POSITIVE);

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    let mut w = vec![0.0; d];
    for _ in 0..k {
        let mut v = start_vector(d, &components);
        for _ in 0..PCA_MAX_ITERATIONS {
            sym_matvec(&cov, d, &v, &mut w);
            orthogonalize(&mut w, &components);
            let len = norm(&w);
            if len <= 1e-14 * scale {
                // remaining spectrum is numerically zero: any orthonormal completion works
                break;
            }
            w.iter_mut().for_each(|x| *x /= len);
            let same: f64 = v.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum();
            let flipped: f64 = v.iter().zip(&w).map(|(a, b)| (a + b) * (a + b)).sum();
            core::mem::swap(&mut v, &mut w);
            if sqrt(same.min(flipped)) < PCA_TOLERANCE {
                break;
            }
        }
        orthogonalize(&mut v, &components);
        let len = norm(&v);
        v.iter_mut().for_each(|x| *x /= len);
        fix_sign(&mut v);

        sym_matvec(&cov, d, &v, &mut w);
        let lambda = dot(&v, &w).max(0.0);
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] -= lambda * v[i] * v[j];
            }
        }
        components.push(v);
        variances.push(lambda);
    }

    // deflation can return near-degenerate pairs out of order
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]));
    let components = order.iter().map(|&i| components[i].clone()).collect();
    let explained_variance = order.iter().map(|&i| variances[i]).collect();

    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        total_variance,
    })
}
