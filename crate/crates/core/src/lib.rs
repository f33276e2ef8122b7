//! Core of the knowledge integrity risk observatory: the risk taxonomy and
//! indicator registry, metric primitives, ingestion, scoring and storage.

pub mod canonical;
pub mod engine;
pub mod ingestion;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod storage;
pub mod synth;

#[cfg(test)]
mod test_support;

pub use model::*;
