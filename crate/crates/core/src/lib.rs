//! Algorithmic core of the signalscope topic-emergence pipeline.
//!
//! Everything in this crate is pure computation over in-memory data and
//! builds with `#![no_std]` plus `alloc`. File formats, the command line and
//! the HTTP labeler client live in the `signalscope` crate.
//!
//! Pipeline order:
//!
//! 1. [`corpus`]: record filtering, tokenization, period schemes.
//! 2. [`embedding`]: row-aligned document vectors and PCA reduction.
//! 3. [`clustering`]: HDBSCAN over the reduced vectors.
//! 4. [`topics`]: class-based TF-IDF, topic reduction and similarity.
//! 5. [`labeling`]: heuristic and service-backed topic labels.
//! 6. [`dynamics`]: yearly proportions, OLS trends, peaks, per-year keywords.
//! 7. [`signals`]: topic emergence maps and signal classification.

#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod clustering;
pub mod corpus;
pub mod dynamics;
pub mod embedding;
pub mod labeling;
pub mod metrics;
pub mod signals;
pub mod stats;
pub mod synth;
pub mod topics;

mod fmath;

pub use clustering::{hdbscan, ClusterError, ClusterParams, Labeling, NOISE};
pub use corpus::{Document, PeriodScheme, RawRecord, Stoplist};
pub use embedding::{EmbeddingError, EmbeddingMatrix, PcaModel};
pub use labeling::{LabelError, LabelSource, LabelerConfig, TopicLabel};
pub use signals::{SignalClass, SignalEvolution, TemMap, TemPoint};
pub use topics::{CtfidfMatrix, TopicError, TopicModel, Vocabulary};
