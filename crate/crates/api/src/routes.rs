use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::Response;
use observatory_core::engine::{entropy_scatter, rank_wikis, EngineError, RankedWiki, DEFAULT_MIN_ARTICLES};
use observatory_core::storage::{SeriesPoint, StoreKey, StoreKind};
use observatory_core::{
    taxonomy, CategoryInfo, IndicatorDefinition, Month, RiskPolarity, WikiId, Window,
};
use serde::Serialize;

use crate::error::ApiError;
use crate::{bytes_response, canonical_response, AppState, API_VERSION};

pub const DEFAULT_LIMIT: usize = 100;
pub const MAX_LIMIT: usize = 1000;

type Params = Result<Query<BTreeMap<String, String>>, QueryRejection>;
type Reply = Result<Response, ApiError>;

fn params(p: Params) -> Result<BTreeMap<String, String>, ApiError> {
    p.map(|Query(m)| m).map_err(|e| ApiError::invalid_parameter(e.body_text()))
}

fn parse<T: std::str::FromStr>(params: &BTreeMap<String, String>, name: &str) -> Result<Option<T>, ApiError>
where
    T::Err: std::fmt::Display,
{
    params
        .get(name)
        .map(|raw| raw.parse::<T>().map_err(|e| ApiError::invalid_parameter(format!("`{name}`: {e}"))))
        .transpose()
}

/// Runs store I/O off the async workers.
async fn blocking<F>(state: Arc<AppState>, f: F) -> Reply
where
    F: FnOnce(&AppState) -> Reply + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .unwrap_or_else(|e| Err(ApiError::internal(format!("handler panicked: {e}"))))
}

/// Latest window among `keys`, by end month then start month.
fn latest_window(keys: &[StoreKey]) -> Option<Window> {
    keys.iter().map(|k| k.window).max_by_key(|w| (w.end(), w.start()))
}

fn stored(state: &AppState, key: &StoreKey) -> Reply {
    match state.store.get_bytes(key)? {
        Some(bytes) => Ok(bytes_response(StatusCode::OK, bytes)),
        None => Err(ApiError::not_found(format!("nothing stored under {key}"))),
    }
}

/// Accepts `ja` or `ja.wikipedia`; the wiki must have stored data.
fn resolve_wiki(state: &AppState, code: &str) -> Result<WikiId, ApiError> {
    let wiki: WikiId = code.parse().map_err(|_| ApiError::unknown_wiki(code))?;
    if state.store.wikis()?.contains(&wiki) {
        Ok(wiki)
    } else {
        Err(ApiError::unknown_wiki(code))
    }
}

fn indicator<'a>(state: &'a AppState, id: &str) -> Result<&'a IndicatorDefinition, ApiError> {
    state.registry.get(id).ok_or_else(|| ApiError::unknown_indicator(id))
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    api_version: &'static str,
    read_only: bool,
}

pub async fn health(State(state): State<Arc<AppState>>) -> Reply {
    blocking(state, |s| {
        if !s.store.root().is_dir() {
            return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "store_unavailable", "store root is missing"));
        }
        Ok(canonical_response(
            StatusCode::OK,
            &Health { status: "ok", api_version: API_VERSION, read_only: s.store.is_read_only() },
        ))
    })
    .await
}

#[derive(Serialize)]
struct TaxonomyBody<'a> {
    categories: Vec<CategoryInfo>,
    indicators: &'a [IndicatorDefinition],
}

pub async fn get_taxonomy(State(state): State<Arc<AppState>>) -> Reply {
    let categories = taxonomy().into_iter().map(CategoryInfo::from).collect();
    Ok(canonical_response(StatusCode::OK, &TaxonomyBody { categories, indicators: state.registry.definitions() }))
}

#[derive(Serialize)]
struct WikiEntry {
    wiki: WikiId,
    code: String,
    family: String,
    windows: Vec<Window>,
}

#[derive(Serialize)]
struct Page<T> {
    items: Vec<T>,
    limit: usize,
    offset: usize,
    total: usize,
}

pub async fn list_wikis(State(state): State<Arc<AppState>>, p: Params) -> Reply {
    let p = params(p)?;
    let limit = parse::<usize>(&p, "limit")?.unwrap_or(DEFAULT_LIMIT);
    let offset = parse::<usize>(&p, "offset")?.unwrap_or(0);
    if !(1..=MAX_LIMIT).contains(&limit) {
        return Err(ApiError::invalid_parameter(format!("`limit` must be between 1 and {MAX_LIMIT}")));
    }
    blocking(state, move |s| {
        let wikis = s.store.wikis()?;
        let mut windows: BTreeMap<String, Vec<Window>> = BTreeMap::new();
        for k in s.store.keys(StoreKind::Snapshot)? {
            let list = windows.entry(k.subject).or_default();
            if !list.contains(&k.window) {
                list.push(k.window);
            }
        }
        let total = wikis.len();
        let items = wikis
            .into_iter()
            .skip(offset)
            .take(limit)
            .map(|w| WikiEntry {
                code: w.code().to_string(),
                family: w.family().to_string(),
                windows: windows.remove(&w.to_string()).unwrap_or_default(),
                wiki: w,
            })
            .collect();
        Ok(canonical_response(StatusCode::OK, &Page { items, limit, offset, total }))
    })
    .await
}

pub async fn wiki_indicators(State(state): State<Arc<AppState>>, Path(code): Path<String>, p: Params) -> Reply {
    let window = parse::<Window>(&params(p)?, "window")?;
    blocking(state, move |s| {
        let wiki = resolve_wiki(s, &code)?;
        let subject = wiki.to_string();
        let keys: Vec<StoreKey> = s
            .store
            .latest_keys(StoreKind::Indicators, window)?
            .into_iter()
            .filter(|k| k.subject == subject)
            .collect();
        let Some(w) = latest_window(&keys) else {
            return Err(ApiError::not_found(format!("no indicators stored for {wiki}")));
        };
        let key = keys.iter().find(|k| k.window == w).expect("window taken from keys");
        stored(s, key)
    })
    .await
}

#[derive(Serialize)]
struct SeriesBody {
    wiki: WikiId,
    indicator_id: String,
    from: Option<Month>,
    to: Option<Month>,
    points: Vec<SeriesPoint>,
}

pub async fn wiki_series(State(state): State<Arc<AppState>>, Path((code, id)): Path<(String, String)>, p: Params) -> Reply {
    let p = params(p)?;
    let from = parse::<Month>(&p, "from")?;
    let to = parse::<Month>(&p, "to")?;
    if let (Some(f), Some(t)) = (from, to) {
        if f > t {
            return Err(ApiError::invalid_parameter("`from` is after `to`"));
        }
    }
    blocking(state, move |s| {
        let wiki = resolve_wiki(s, &code)?;
        indicator(s, &id)?;
        let points = s.store.series(&wiki, &id, from, to)?;
        Ok(canonical_response(StatusCode::OK, &SeriesBody { wiki, indicator_id: id, from, to, points }))
    })
    .await
}

pub async fn matrix(State(state): State<Arc<AppState>>, p: Params) -> Reply {
    let window = parse::<Window>(&params(p)?, "window")?;
    blocking(state, move |s| {
        let keys = s.store.latest_keys(StoreKind::Matrix, window)?;
        let Some(w) = latest_window(&keys) else {
            return Err(ApiError::not_found("no risk matrix stored for that window"));
        };
        stored(s, keys.iter().find(|k| k.window == w).expect("window taken from keys"))
    })
    .await
}

#[derive(Serialize)]
struct RankingsBody {
    indicator_id: String,
    window: Window,
    risk_polarity: RiskPolarity,
    items: Vec<RankedWiki>,
}

pub async fn rankings(State(state): State<Arc<AppState>>, Path(id): Path<String>, p: Params) -> Reply {
    let window = parse::<Window>(&params(p)?, "window")?;
    blocking(state, move |s| {
        let def = indicator(s, &id)?;
        if !def.is_scorable() {
            return Err(ApiError::invalid_parameter(format!("indicator `{id}` has no scalar value to rank")));
        }
        let keys = s.store.latest_keys(StoreKind::Indicators, window)?;
        let Some(w) = latest_window(&keys) else {
            return Err(ApiError::not_found("no indicators stored for that window"));
        };
        let mut values = Vec::new();
        for key in keys.iter().filter(|k| k.window == w) {
            if let Some(set) = s.store.get_indicators(key)? {
                if let Some(v) = set.get(&id).and_then(|v| v.value.scalar()) {
                    values.push((set.wiki.clone(), v));
                }
            }
        }
        if values.is_empty() {
            return Err(ApiError::not_found(format!("no wiki has a value for `{id}` in {w}")));
        }
        let items = rank_wikis(def, &values).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(canonical_response(
            StatusCode::OK,
            &RankingsBody { indicator_id: id, window: w, risk_polarity: def.risk_polarity, items },
        ))
    })
    .await
}

pub async fn scatter(State(state): State<Arc<AppState>>, p: Params) -> Reply {
    let p = params(p)?;
    let window = parse::<Window>(&p, "window")?;
    let min_articles = parse::<i64>(&p, "min_articles")?.unwrap_or(DEFAULT_MIN_ARTICLES as i64);
    if min_articles <= 0 {
        return Err(ApiError::invalid_parameter("`min_articles` must be positive"));
    }
    let min_articles = min_articles as u64;
    blocking(state, move |s| {
        let window = match window {
            Some(w) => w,
            None => latest_window(&s.store.latest_keys(StoreKind::Snapshot, None)?)
                .ok_or_else(|| ApiError::not_found("no snapshots stored"))?,
        };
        let stored_keys = s.store.latest_keys(StoreKind::Scatter, Some(window))?;
        let wanted = StoreKey::scatter(window, min_articles, 0).subject;
        if let Some(key) = stored_keys.iter().find(|k| k.subject == wanted) {
            return stored(s, key);
        }
        let snapshots = s.store.snapshots(window)?;
        match entropy_scatter(&snapshots, window, min_articles) {
            Ok(result) => Ok(canonical_response(StatusCode::OK, &result)),
            Err(EngineError::InsufficientData { qualifying }) => Err(ApiError::insufficient_data(format!(
                "{qualifying} wiki(s) in {window} have more than {min_articles} articles and both distributions; at least 2 are needed"
            ))),
            Err(EngineError::DegenerateFit) => {
                Err(ApiError::insufficient_data("all qualifying wikis share one edit entropy; no line can be fitted"))
            }
            Err(e) => Err(ApiError::internal(e.to_string())),
        }
    })
    .await
}
