//! File formats, pipeline orchestration and the HTTP labeling client for
//! `signalscope`. The algorithms live in `signalscope-core`.

pub mod config;
pub mod http_labeler;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use config::PipelineConfig;
pub use pipeline::{run, Manifest, RunSummary, Stage};
