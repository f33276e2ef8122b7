//! Applies the indicator registry to snapshots: indicator values, cross-wiki
//! risk percentiles, per-category scores, rankings and the entropy scatter.

mod indicators;
mod scatter;
mod scoring;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{LogBase, MetricsError};
use crate::model::{CountryCode, ValueKind};

pub use indicators::{compute_indicator, compute_indicator_set, edit_distribution, IndicatorSet};
pub use scatter::{entropy_scatter, monthly_entropies, ScatterParameters, ScatterPoint, ScatterResult, DEFAULT_MIN_ARTICLES};
pub use scoring::{
    assess, build_risk_matrix, category_score, rank_wikis, risk_percentile, Assessment, MatrixRow, RankedWiki,
    RiskMatrix,
};

/// Version of the aggregate documents (matrix, scatter, indicator sets).
pub const ENGINE_METHOD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("indicator {indicator}: expected a {expected} value, snapshot data yields {found}")]
    KindMismatch { indicator: String, expected: ValueKind, found: ValueKind },
    #[error("empty cohort")]
    EmptyCohort,
    #[error("{0}")]
    EmptyInput(String),
    #[error("insufficient data: {qualifying} qualifying wikis, at least 2 needed")]
    InsufficientData { qualifying: usize },
    #[error("degenerate fit: all edit entropies are equal")]
    DegenerateFit,
    #[error("invalid democracy index: {0}")]
    InvalidIndex(String),
    #[error(transparent)]
    Metrics(MetricsError),
}

impl From<MetricsError> for EngineError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::EmptyCohort => EngineError::EmptyCohort,
            MetricsError::DegenerateFit => EngineError::DegenerateFit,
            other => EngineError::Metrics(other),
        }
    }
}

/// Per-country democracy scores in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemocracyIndex {
    pub provenance: String,
    pub scores: BTreeMap<CountryCode, f64>,
}

impl DemocracyIndex {
    pub fn new(provenance: impl Into<String>, scores: BTreeMap<CountryCode, f64>) -> Result<Self, EngineError> {
        if let Some((c, v)) = scores.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(EngineError::InvalidIndex(format!("{c} has score {v} outside [0, 1]")));
        }
        Ok(DemocracyIndex { provenance: provenance.into(), scores })
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let bytes = fs::read(path).map_err(|e| EngineError::InvalidIndex(format!("{}: {e}", path.display())))?;
        let raw: DemocracyIndex = serde_json::from_slice(&bytes)
            .map_err(|e| EngineError::InvalidIndex(format!("{}: {e}", path.display())))?;
        DemocracyIndex::new(raw.provenance, raw.scores)
    }
}

/// Inputs shared by every indicator computation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EngineContext {
    pub democracy_index: Option<DemocracyIndex>,
    pub log_base: LogBase,
}
