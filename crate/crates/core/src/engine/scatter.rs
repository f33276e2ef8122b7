use serde::{Deserialize, Serialize};

use super::indicators::edit_distribution;
use super::scoring::latest_per_wiki;
use super::{EngineError, ENGINE_METHOD_VERSION};
use crate::metrics::{linear_fit, normalize, shannon_entropy_in, EntropyValue, LinearFit, LogBase, MetricsError};
use crate::model::{Month, Subject, WikiSnapshot, Window};

pub const DEFAULT_MIN_ARTICLES: u64 = 500_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    /// Language code of the wiki.
    pub wiki: String,
    /// Nats.
    pub edit_entropy: f64,
    /// Nats.
    pub view_entropy: f64,
    pub articles: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterParameters {
    pub min_articles: u64,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterResult {
    pub method_version: u32,
    pub parameters: ScatterParameters,
    pub points: Vec<ScatterPoint>,
    pub fit: LinearFit,
}

fn entropy_of(m: impl IntoIterator<Item = (crate::model::CountryCode, f64)>) -> Option<f64> {
    match normalize(m) {
        Ok(d) => Some(shannon_entropy_in(&d, LogBase::Natural).nats),
        Err(_) => None,
    }
}

/// Edit and view entropy per wiki with more than `min_articles` articles,
/// monthly magnitudes summed over the window before normalizing, plus the
/// least-squares line of view entropy on edit entropy.
pub fn entropy_scatter(
    snapshots: &[WikiSnapshot],
    window: Window,
    min_articles: u64,
) -> Result<ScatterResult, EngineError> {
    let mut points: Vec<ScatterPoint> = latest_per_wiki(snapshots)
        .into_iter()
        .filter(|s| s.site_stats.articles > min_articles)
        .filter_map(|s| {
            Some(ScatterPoint {
                wiki: s.wiki.clone(),
                edit_entropy: entropy_of(edit_distribution(s)?)?,
                view_entropy: entropy_of(s.summed_distribution(Subject::Views)?)?,
                articles: s.site_stats.articles,
            })
        })
        .collect();
    points.sort_by(|a, b| a.wiki.cmp(&b.wiki));
    if points.len() < 2 {
        return Err(EngineError::InsufficientData { qualifying: points.len() });
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.edit_entropy, p.view_entropy)).collect();
    let fit = linear_fit(&xy).map_err(|e| match e {
        MetricsError::InsufficientPoints(n) => EngineError::InsufficientData { qualifying: n },
        other => other.into(),
    })?;
    Ok(ScatterResult {
        method_version: ENGINE_METHOD_VERSION,
        parameters: ScatterParameters { min_articles, window },
        points,
        fit,
    })
}

/// Per-month entropies of one subject, for comparing against the
/// summed-window figure. Months without data are skipped.
pub fn monthly_entropies(snapshot: &WikiSnapshot, subject: Subject, base: LogBase) -> Vec<(Month, EntropyValue)> {
    let mut out: Vec<(Month, EntropyValue)> = Vec::new();
    for month in snapshot.window.months() {
        let mut acc = std::collections::BTreeMap::new();
        for d in snapshot.distributions_of(subject).filter(|d| d.window.contains(month) && d.window.months().count() == 1) {
            for (k, v) in &d.entries {
                *acc.entry(k.clone()).or_insert(0.0) += v;
            }
        }
        if let Ok(d) = normalize(acc) {
            out.push((month, shannon_entropy_in(&d, base)));
        }
    }
    out
}
