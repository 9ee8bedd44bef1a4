//! Independent reference implementations shared by the test targets.
#![allow(dead_code)]

pub mod ctfidf;
pub mod hdbscan;
pub mod signals;
pub mod trend;
