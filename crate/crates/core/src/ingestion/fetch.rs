//! Fetchers for the Wikimedia action API and the analytics REST API.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::Value;

use super::client::ApiClient;
use super::parse::{self, ApiErrorInfo};
use super::IngestError;
use crate::model::{CountryDistribution, GovernanceStats, Month, SiteStats, WikiId, Window};

/// Page limit for paginated lists; a runaway continuation loop stops here.
const MAX_PAGES: usize = 10_000;

/// Base URLs. Overridable so tests and mirrors can point elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoints {
    /// Action API URL template; `{host}` is replaced by the wiki host.
    pub action_api: String,
    pub rest_api: String,
}

impl Default for Endpoints {
    fn default() -> Self {
        Endpoints {
            action_api: "https://{host}/w/api.php".to_string(),
            rest_api: "https://wikimedia.org/api/rest_v1".to_string(),
        }
    }
}

/// Editor activity levels published by the editors-by-country series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivityLevel {
    From5To99Edits,
    From100Edits,
}

impl ActivityLevel {
    pub const ALL: [ActivityLevel; 2] = [ActivityLevel::From5To99Edits, ActivityLevel::From100Edits];

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityLevel::From5To99Edits => "5..99-edits",
            ActivityLevel::From100Edits => "100..-edits",
        }
    }
}

/// Percent-encodes a query component (RFC 3986 unreserved set kept).
pub fn encode_component(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

pub struct WikiFetcher {
    client: Arc<ApiClient>,
    endpoints: Endpoints,
}

impl WikiFetcher {
    pub fn new(client: Arc<ApiClient>, endpoints: Endpoints) -> Self {
        WikiFetcher { client, endpoints }
    }

    pub fn client(&self) -> &ApiClient {
        &self.client
    }

    /// Deterministic action API URL: fixed prefix, caller's parameter order,
    /// then continuation parameters sorted by key.
    pub fn action_url(&self, wiki: &WikiId, params: &[(&str, &str)], cont: Option<&BTreeMap<String, String>>) -> String {
        let mut url = self.endpoints.action_api.replace("{host}", &wiki.host());
        url.push_str("?action=query&format=json&formatversion=2");
        let extra = cont.into_iter().flat_map(|c| c.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        for (k, v) in params.iter().copied().chain(extra) {
            url.push('&');
            url.push_str(&encode_component(k));
            url.push('=');
            url.push_str(&encode_component(v));
        }
        url
    }

    fn action_get(&self, wiki: &WikiId, url: &str) -> Result<Vec<u8>, IngestError> {
        let resp = self.client.get(url)?;
        match resp.status {
            200..=299 => Ok(resp.body),
            404 => Err(IngestError::UnknownWiki(wiki.clone())),
            status => Err(IngestError::Http { url: url.to_string(), status }),
        }
    }

    /// Follows continuation to exhaustion. The inner `Err` carries an API-level
    /// error (e.g. an unknown list module or group) for the caller to map.
    fn list_all(
        &self,
        wiki: &WikiId,
        context: &str,
        list: &str,
        params: &[(&str, &str)],
    ) -> Result<Result<Vec<Value>, ApiErrorInfo>, IngestError> {
        let mut items = Vec::new();
        let mut cont: Option<BTreeMap<String, String>> = None;
        for _ in 0..MAX_PAGES {
            let url = self.action_url(wiki, params, cont.as_ref());
            let body = self.action_get(wiki, &url)?;
            match parse::parse_list_page(context, list, &body)? {
                Err(e) => return Ok(Err(e)),
                Ok(page) => {
                    items.extend(page.items);
                    match page.continuation {
                        Some(c) => cont = Some(c),
                        None => return Ok(Ok(items)),
                    }
                }
            }
        }
        Err(IngestError::Parse {
            context: context.to_string(),
            message: format!("continuation did not terminate after {MAX_PAGES} pages"),
        })
    }

    pub fn fetch_site_statistics(&self, wiki: &WikiId) -> Result<SiteStats, IngestError> {
        let url = self.action_url(wiki, &[("meta", "siteinfo"), ("siprop", "statistics")], None);
        parse::parse_site_statistics(&self.action_get(wiki, &url)?)
    }

    /// Direct members of a tracking category, `None` if it does not exist.
    pub fn fetch_category_size(&self, wiki: &WikiId, category: &str) -> Result<Option<u64>, IngestError> {
        let title = format!("Category:{category}");
        let url = self.action_url(wiki, &[("prop", "categoryinfo"), ("titles", &title)], None);
        parse::parse_category_size(&self.action_get(wiki, &url)?)
    }

    /// Distinct holders of any of `groups`, optionally restricted to users
    /// active in the last 30 days. A group unknown to the wiki counts as 0.
    pub fn count_group_members(&self, wiki: &WikiId, groups: &[&str], active_only: bool) -> Result<u64, IngestError> {
        let joined = groups.join("|");
        let mut params = vec![("list", "allusers"), ("augroup", joined.as_str()), ("aulimit", "max")];
        if active_only {
            params.push(("auactiveusers", "1"));
        }
        match self.list_all(wiki, "user groups", "allusers", &params)? {
            Ok(items) => {
                let names: BTreeSet<&str> = items.iter().filter_map(|u| u.get("name")?.as_str()).collect();
                if names.len() != items.len() {
                    // entries without names still count once each
                    return Ok(items.len().max(names.len()) as u64);
                }
                Ok(names.len() as u64)
            }
            Err(e) if e.code == "badvalue" || e.code.starts_with("unknown") => Ok(0),
            Err(e) => Err(IngestError::Parse {
                context: "user groups".into(),
                message: format!("API error {}: {}", e.code, e.info),
            }),
        }
    }

    pub fn fetch_user_group_counts(
        &self,
        wiki: &WikiId,
        groups: &BTreeSet<String>,
    ) -> Result<BTreeMap<String, u64>, IngestError> {
        if groups.is_empty() {
            return Err(IngestError::Precondition("at least one user group must be requested".into()));
        }
        groups
            .iter()
            .map(|g| Ok((g.clone(), self.count_group_members(wiki, &[g.as_str()], false)?)))
            .collect()
    }

    /// Abuse-filter and block counts. `total_accounts` comes from site
    /// statistics; fields the wiki cannot report stay `None`.
    pub fn fetch_governance_stats(&self, wiki: &WikiId, total_accounts: Option<u64>) -> Result<GovernanceStats, IngestError> {
        let filters = match self.list_all(
            wiki,
            "abuse filters",
            "abusefilters",
            &[("list", "abusefilters"), ("abfprop", "id|status"), ("abflimit", "max")],
        )? {
            Ok(items) => Some(parse::count_enabled_filters(&items)?),
            // no AbuseFilter extension: the list module is unknown
            Err(e) if e.code == "badvalue" || e.code.starts_with("unknown") => None,
            Err(e) => {
                return Err(IngestError::Parse {
                    context: "abuse filters".into(),
                    message: format!("API error {}: {}", e.code, e.info),
                })
            }
        };
        let blocks = match self.list_all(
            wiki,
            "blocks",
            "blocks",
            &[("list", "blocks"), ("bkshow", "account"), ("bkprop", "id"), ("bklimit", "max")],
        )? {
            Ok(items) => Some(items.len() as u64),
            Err(e) => {
                return Err(IngestError::Parse {
                    context: "blocks".into(),
                    message: format!("API error {}: {}", e.code, e.info),
                })
            }
        };
        let g = GovernanceStats {
            abusefilter_rules: filters,
            blocked_accounts: blocks,
            total_accounts,
            ..Default::default()
        };
        g.validate().map_err(|e| IngestError::Parse { context: "blocks".into(), message: e.to_string() })?;
        Ok(g)
    }

    fn rest_get(&self, url: &str, what: String) -> Result<Vec<u8>, IngestError> {
        let resp = self.client.get(url)?;
        match resp.status {
            200..=299 => Ok(resp.body),
            // the analytics API answers 404 outside the data availability window
            404 => Err(IngestError::NoData { what }),
            status => Err(IngestError::Http { url: url.to_string(), status }),
        }
    }

    pub fn views_url(&self, wiki: &WikiId, month: Month) -> String {
        format!(
            "{}/metrics/pageviews/top-by-country/{}/all-access/{:04}/{:02}",
            self.endpoints.rest_api,
            wiki.host(),
            month.year(),
            month.month()
        )
    }

    pub fn editors_url(&self, wiki: &WikiId, month: Month, level: ActivityLevel) -> String {
        format!(
            "{}/metrics/editors/by-country/{}/{}/{:04}/{:02}",
            self.endpoints.rest_api,
            wiki.host(),
            level.as_str(),
            month.year(),
            month.month()
        )
    }

    pub fn fetch_views_by_country(&self, wiki: &WikiId, month: Month) -> Result<CountryDistribution, IngestError> {
        let body = self.rest_get(&self.views_url(wiki, month), format!("views by country {wiki} {month}"))?;
        parse::parse_views_by_country(&body, Window::month(month))
    }

    pub fn fetch_editors_by_country(
        &self,
        wiki: &WikiId,
        month: Month,
        level: ActivityLevel,
    ) -> Result<CountryDistribution, IngestError> {
        let body = self.rest_get(
            &self.editors_url(wiki, month, level),
            format!("editors by country {wiki} {month} {}", level.as_str()),
        )?;
        parse::parse_editors_by_country(&body, Window::month(month))
    }
}
