//! Store-to-store glue: turn the snapshots stored for a window into indicator
//! sets, a risk matrix and an entropy scatter, and persist them.

use thiserror::Error;

use crate::engine::{assess, entropy_scatter, EngineContext, EngineError, ScatterResult, ENGINE_METHOD_VERSION};
use crate::model::{Registry, Window};
use crate::storage::{Document, Receipt, Store, StoreError, StoreKey};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no snapshots stored for {0}")]
    NoSnapshots(Window),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug)]
pub struct ComputeReport {
    pub window: Window,
    pub wikis: usize,
    pub receipts: Vec<Receipt>,
    pub scatter: Result<ScatterResult, EngineError>,
}

impl ComputeReport {
    /// Documents newly written (identical re-puts excluded).
    pub fn written(&self) -> usize {
        self.receipts.iter().filter(|r| r.written).count()
    }
}

/// Computes and stores everything derived from `window`'s snapshots. A
/// scatter that cannot be formed (too few qualifying wikis) is reported, not
/// treated as a failure.
pub fn compute_window(
    store: &Store,
    window: Window,
    registry: &Registry,
    ctx: &EngineContext,
    min_articles: u64,
) -> Result<ComputeReport, PipelineError> {
    let snapshots = store.snapshots(window)?;
    if snapshots.is_empty() {
        return Err(PipelineError::NoSnapshots(window));
    }
    let assessment = assess(&snapshots, registry, ctx)?;
    let mut receipts = Vec::new();
    for set in &assessment.indicator_sets {
        let key = StoreKey::indicators(&set.wiki, set.window, ENGINE_METHOD_VERSION);
        receipts.push(store.put(&key, &Document::Indicators(set.clone()))?);
    }
    let matrix = assessment.matrix;
    let key = StoreKey::matrix(matrix.window, ENGINE_METHOD_VERSION);
    receipts.push(store.put(&key, &Document::Matrix(matrix))?);

    let scatter = entropy_scatter(&snapshots, window, min_articles);
    if let Ok(result) = &scatter {
        let key = StoreKey::scatter(window, min_articles, ENGINE_METHOD_VERSION);
        receipts.push(store.put(&key, &Document::Scatter(result.clone()))?);
    }
    Ok(ComputeReport { window, wikis: assessment.indicator_sets.len(), receipts, scatter })
}
