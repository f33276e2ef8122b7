use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::indicators::{compute_indicator_set, IndicatorSet};
use super::{EngineContext, EngineError, ENGINE_METHOD_VERSION};
use crate::canonical;
use crate::metrics::percentile_rank;
use crate::model::{
    CategoryRiskScore, Contribution, IndicatorDefinition, Registry, RiskCategory, RiskPolarity, WikiId, WikiSnapshot,
    Window,
};

/// Risk percentile of `value` within `cohort`, oriented so that 1 is the
/// riskiest position.
pub fn risk_percentile(def: &IndicatorDefinition, value: f64, cohort: &[f64]) -> Result<f64, EngineError> {
    let p = percentile_rank(value, cohort)?;
    Ok(match def.risk_polarity {
        RiskPolarity::HigherIsRiskier => p,
        RiskPolarity::LowerIsRiskier => 1.0 - p,
    })
}

/// Mean risk of one wiki's available indicators in `category`, or `None` when
/// none of them is available. `risks` maps indicator id to risk percentile.
pub fn category_score(
    wiki: &WikiId,
    category: RiskCategory,
    registry: &Registry,
    risks: &BTreeMap<String, f64>,
    cohort: &[WikiId],
) -> Option<CategoryRiskScore> {
    let scorable: Vec<&IndicatorDefinition> = registry.in_category(category).filter(|d| d.is_scorable()).collect();
    let contributing: Vec<Contribution> = scorable
        .iter()
        .filter_map(|d| {
            risks.get(&d.id).map(|&risk_percentile| Contribution { indicator_id: d.id.clone(), risk_percentile })
        })
        .collect();
    if contributing.is_empty() {
        return None;
    }
    let score = contributing.iter().map(|c| c.risk_percentile).sum::<f64>() / contributing.len() as f64;
    Some(CategoryRiskScore {
        wiki: wiki.clone(),
        category,
        score,
        coverage: contributing.len() as f64 / scorable.len() as f64,
        contributing,
        cohort: cohort.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedWiki {
    pub wiki: WikiId,
    pub value: f64,
    pub risk_percentile: f64,
}

/// Ranks wikis on one indicator, riskiest first; ties go to the lower code.
pub fn rank_wikis(def: &IndicatorDefinition, values: &[(WikiId, f64)]) -> Result<Vec<RankedWiki>, EngineError> {
    if values.is_empty() {
        return Err(EngineError::EmptyInput(format!("no values to rank for {}", def.id)));
    }
    let cohort: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
    let mut out = values
        .iter()
        .map(|(wiki, value)| {
            Ok(RankedWiki { wiki: wiki.clone(), value: *value, risk_percentile: risk_percentile(def, *value, &cohort)? })
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    out.sort_by(|a, b| b.risk_percentile.total_cmp(&a.risk_percentile).then_with(|| a.wiki.cmp(&b.wiki)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub wiki: WikiId,
    /// One cell per taxonomy leaf, in `categories` order; `None` is no data.
    pub cells: Vec<Option<CategoryRiskScore>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskMatrix {
    pub window: Window,
    pub method_version: u32,
    pub as_of: DateTime<Utc>,
    pub categories: Vec<RiskCategory>,
    pub wikis: Vec<WikiId>,
    pub rows: Vec<MatrixRow>,
}

impl RiskMatrix {
    pub fn cell(&self, wiki: &WikiId, category: RiskCategory) -> Option<&CategoryRiskScore> {
        let row = self.rows.iter().find(|r| &r.wiki == wiki)?;
        row.cells.get(category.index())?.as_ref()
    }
}

/// Latest snapshot per wiki. Exact capture-time ties are broken on content so
/// the choice never depends on input order.
pub(crate) fn latest_per_wiki(snapshots: &[WikiSnapshot]) -> Vec<&WikiSnapshot> {
    let mut by_wiki: BTreeMap<WikiId, &WikiSnapshot> = BTreeMap::new();
    for s in snapshots {
        let id = s.id();
        match by_wiki.get(&id) {
            Some(cur) => {
                let newer = (s.captured_at, s.window.end(), s.window.start())
                    .cmp(&(cur.captured_at, cur.window.end(), cur.window.start()))
                    .then_with(|| {
                        let a = canonical::to_canonical_string(s).unwrap_or_default();
                        let b = canonical::to_canonical_string(*cur).unwrap_or_default();
                        a.cmp(&b)
                    });
                if newer.is_gt() {
                    by_wiki.insert(id, s);
                }
            }
            None => {
                by_wiki.insert(id, s);
            }
        }
    }
    by_wiki.into_values().collect()
}

/// Indicator sets for every wiki plus the matrix built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub indicator_sets: Vec<IndicatorSet>,
    pub matrix: RiskMatrix,
}

pub fn assess(snapshots: &[WikiSnapshot], registry: &Registry, ctx: &EngineContext) -> Result<Assessment, EngineError> {
    let chosen = latest_per_wiki(snapshots);
    if chosen.is_empty() {
        return Err(EngineError::EmptyInput("no snapshots to assess".into()));
    }
    let window = Window::new(
        chosen.iter().map(|s| s.window.start()).min().expect("non-empty"),
        chosen.iter().map(|s| s.window.end()).max().expect("non-empty"),
    )
    .expect("union of valid windows is valid");
    let as_of = chosen.iter().map(|s| s.captured_at).max().expect("non-empty");
    let sets: Vec<IndicatorSet> =
        chosen.par_iter().map(|s| compute_indicator_set(registry, s, ctx)).collect::<Result<_, _>>()?;
    let wikis: Vec<WikiId> = sets.iter().map(|s| s.wiki.clone()).collect();

    // wiki index -> indicator id -> risk
    let mut risks: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); sets.len()];
    for def in registry.definitions().iter().filter(|d| d.is_scorable()) {
        let present: Vec<(usize, f64)> = sets
            .iter()
            .enumerate()
            .filter_map(|(i, set)| Some((i, set.get(&def.id)?.value.scalar()?)))
            .collect();
        let cohort: Vec<f64> = present.iter().map(|(_, v)| *v).collect();
        for (i, v) in &present {
            risks[*i].insert(def.id.clone(), risk_percentile(def, *v, &cohort)?);
        }
    }

    let rows = wikis
        .iter()
        .zip(&risks)
        .map(|(wiki, r)| MatrixRow {
            wiki: wiki.clone(),
            cells: RiskCategory::ALL.iter().map(|c| category_score(wiki, *c, registry, r, &wikis)).collect(),
        })
        .collect();
    let matrix = RiskMatrix {
        window,
        method_version: ENGINE_METHOD_VERSION,
        as_of,
        categories: RiskCategory::ALL.to_vec(),
        wikis,
        rows,
    };
    Ok(Assessment { indicator_sets: sets, matrix })
}

pub fn build_risk_matrix(
    snapshots: &[WikiSnapshot],
    registry: &Registry,
    ctx: &EngineContext,
) -> Result<RiskMatrix, EngineError> {
    assess(snapshots, registry, ctx).map(|a| a.matrix)
}
