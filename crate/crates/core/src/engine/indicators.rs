use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EngineContext, EngineError};
use crate::metrics::{self, normalize, shannon_entropy_in, MetricsError, ProbabilityDistribution};
use crate::model::{
    CountryCode, IndicatorDefinition, IndicatorValue, Method, Provenance, Registry, SiteField, Subject, Value,
    WikiId, WikiSnapshot, Window, ACTIVE_ELEVATED_GROUP_KEY,
};
use crate::storage::StoreKey;

/// All indicator values of one wiki and window, plus the ids that could not
/// be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSet {
    pub wiki: WikiId,
    pub window: Window,
    pub values: Vec<IndicatorValue>,
    pub missing: Vec<String>,
}

impl IndicatorSet {
    pub fn get(&self, indicator_id: &str) -> Option<&IndicatorValue> {
        self.values.iter().find(|v| v.indicator_id == indicator_id)
    }
}

/// The distribution used for "edits by country". Upstream publishes active
/// editors by country rather than edits, so those stand in when a snapshot
/// carries no Edits distribution.
pub fn edit_distribution(snapshot: &WikiSnapshot) -> Option<BTreeMap<CountryCode, f64>> {
    snapshot
        .summed_distribution(Subject::Edits)
        .or_else(|| snapshot.summed_distribution(Subject::ActiveEditors))
}

fn country_distribution(snapshot: &WikiSnapshot, subject: Subject) -> Option<BTreeMap<CountryCode, f64>> {
    match subject {
        Subject::Edits => edit_distribution(snapshot),
        other => snapshot.summed_distribution(other),
    }
}

/// Normalizes, treating a distribution without mass as missing data.
fn normalized<K: Ord>(m: impl IntoIterator<Item = (K, f64)>) -> Result<Option<ProbabilityDistribution<K>>, EngineError> {
    match normalize(m) {
        Ok(d) => Ok(Some(d)),
        Err(MetricsError::EmptyDistribution) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn count(v: Option<u64>) -> Option<Value> {
    v.map(|value| Value::Count { value })
}

fn ratio(num: Option<u64>, den: Option<u64>) -> Option<Value> {
    metrics::ratio(num?, den?).map(|value| Value::Ratio { value })
}

fn compute_value(def: &IndicatorDefinition, s: &WikiSnapshot, ctx: &EngineContext) -> Result<Option<Value>, EngineError> {
    let site = &s.site_stats;
    let gov = &s.governance_stats;
    Ok(match &def.method {
        Method::SiteCount { field } => Some(Value::Count {
            value: match field {
                SiteField::Articles => site.articles,
                SiteField::Editors => site.editors,
                SiteField::ActiveEditors => site.active_editors,
            },
        }),
        Method::GroupCount { group } => count(s.group_counts.get(group).copied()),
        Method::ActiveElevatedRatio => {
            ratio(s.group_counts.get(ACTIVE_ELEVATED_GROUP_KEY).copied(), Some(site.active_editors))
        }
        Method::PatrollingTools => count(gov.patrolling_tools),
        Method::AbuseFilterRules => count(gov.abusefilter_rules),
        Method::StewardRequests => count(gov.steward_requests),
        Method::StewardsWithLanguage => count(gov.stewards_with_language),
        Method::DeletionRatio => ratio(gov.deletion_requests, Some(site.articles)),
        Method::BlockedAccountRatio => ratio(gov.blocked_accounts, gov.total_accounts),
        Method::StubRatio => ratio(site.stub_articles, Some(site.articles)),
        Method::EditingDepth => match (site.stub_articles, metrics::ratio(site.stub_articles.unwrap_or(0), site.articles)) {
            (Some(_), Some(stub_ratio)) => {
                metrics::editing_depth(site.edits, site.articles, site.total_pages, stub_ratio)
                    .map(|value| Value::Score { value, coverage: None })
            }
            _ => None,
        },
        Method::CountryEntropy { subject } => match country_distribution(s, *subject) {
            Some(m) => normalized(m)?.map(|d| Value::Entropy(shannon_entropy_in(&d, ctx.log_base))),
            None => None,
        },
        Method::CountryDistribution { subject } => match country_distribution(s, *subject) {
            Some(m) => normalized(m)?.map(|d| Value::Distribution {
                entries: d.into_entries().into_iter().map(|(k, p)| (k.as_str().to_string(), p)).collect(),
            }),
            None => None,
        },
        Method::DemocracyScore { subject } => {
            match (&ctx.democracy_index, country_distribution(s, *subject)) {
                (Some(index), Some(m)) => match normalized(m)? {
                    Some(d) => {
                        let r = metrics::democratic_quality_score(&d, &index.scores)?;
                        r.score.map(|value| Value::Score { value, coverage: Some(r.coverage) })
                    }
                    None => None,
                },
                _ => None,
            }
        }
        Method::ProviderScore { provider, key } => s
            .external_scores
            .get(provider)
            .and_then(|t| t.get(key))
            .map(|&value| Value::Score { value, coverage: None }),
        Method::ProviderDistribution { provider } => match s.external_scores.get(provider) {
            Some(t) => normalized(t.iter().map(|(k, v)| (k.clone(), *v)))?.map(|d| Value::Distribution {
                entries: d.into_entries(),
            }),
            None => None,
        },
        Method::ProviderEntropy { provider } => match s.external_scores.get(provider) {
            Some(t) => normalized(t.iter().map(|(k, v)| (k.clone(), *v)))?
                .map(|d| Value::Entropy(shannon_entropy_in(&d, ctx.log_base))),
            None => None,
        },
    })
}

/// One indicator for one snapshot. `Ok(None)` means the inputs are missing.
pub fn compute_indicator(
    def: &IndicatorDefinition,
    snapshot: &WikiSnapshot,
    ctx: &EngineContext,
) -> Result<Option<IndicatorValue>, EngineError> {
    let Some(value) = compute_value(def, snapshot, ctx)? else {
        return Ok(None);
    };
    if value.kind() != def.value_kind {
        return Err(EngineError::KindMismatch {
            indicator: def.id.clone(),
            expected: def.value_kind,
            found: value.kind(),
        });
    }
    Ok(Some(IndicatorValue {
        indicator_id: def.id.clone(),
        wiki: snapshot.id(),
        window: snapshot.window,
        value,
        provenance: Provenance {
            snapshot_ids: vec![StoreKey::for_snapshot(snapshot).to_string()],
            method_version: def.method_version,
            computed_at: snapshot.captured_at,
        },
    }))
}

/// Every registry indicator for one snapshot, in registry order.
pub fn compute_indicator_set(
    registry: &Registry,
    snapshot: &WikiSnapshot,
    ctx: &EngineContext,
) -> Result<IndicatorSet, EngineError> {
    let mut values = Vec::new();
    let mut missing = Vec::new();
    for def in registry.definitions() {
        match compute_indicator(def, snapshot, ctx)? {
            Some(v) => values.push(v),
            None => missing.push(def.id.clone()),
        }
    }
    Ok(IndicatorSet { wiki: snapshot.id(), window: snapshot.window, values, missing })
}
