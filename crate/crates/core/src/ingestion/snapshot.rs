//! Orchestrates the fetchers into one snapshot per wiki and window.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread;

use chrono::{DateTime, Utc};
use log::{info, warn};

use super::client::{ApiClient, FetchPolicy};
use super::clock::Clock;
use super::fetch::{ActivityLevel, Endpoints, WikiFetcher};
use super::fixture::AuxiliaryData;
use super::transport::Transport;
use super::IngestError;
use crate::model::{
    CountryCode, CountryDistribution, GovernanceStats, Subject, WikiId, WikiSnapshot, Window,
    ACTIVE_ELEVATED_GROUP_KEY, ELEVATED_GROUPS, ELEVATED_GROUP_KEY, SNAPSHOT_SCHEMA_VERSION,
};

/// Capture time used when replaying recorded payloads: the end of the window,
/// so that replays are reproducible.
pub fn replay_epoch(window: Window) -> DateTime<Utc> {
    window.end().first_instant()
}

/// Wikis with a recording directory (`<code>.<family>`) under `root`, sorted.
pub fn recorded_wikis(root: &Path) -> Result<Vec<WikiId>, IngestError> {
    let entries = std::fs::read_dir(root).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => IngestError::FileNotFound(root.to_path_buf()),
        _ => IngestError::Io { path: root.to_path_buf(), source },
    })?;
    let mut out: Vec<WikiId> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().to_str()?.parse().ok())
        .collect();
    out.sort();
    Ok(out)
}

pub struct Ingestor {
    fetcher: WikiFetcher,
    client: Arc<ApiClient>,
    wiki_locks: Mutex<HashMap<WikiId, Arc<Mutex<()>>>>,
}

impl Ingestor {
    pub fn new(policy: FetchPolicy, transport: Arc<dyn Transport>, clock: Arc<dyn Clock>) -> Result<Self, IngestError> {
        Self::with_endpoints(policy, transport, clock, Endpoints::default())
    }

    pub fn with_endpoints(
        policy: FetchPolicy,
        transport: Arc<dyn Transport>,
        clock: Arc<dyn Clock>,
        endpoints: Endpoints,
    ) -> Result<Self, IngestError> {
        let client = Arc::new(ApiClient::new(policy, transport, clock)?);
        Ok(Ingestor {
            fetcher: WikiFetcher::new(client.clone(), endpoints),
            client,
            wiki_locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn client(&self) -> &ApiClient {
        &self.client
    }

    /// Snapshot stamped with the current clock time.
    pub fn snapshot_wiki(&self, wiki: &WikiId, window: Window, aux: &AuxiliaryData) -> Result<WikiSnapshot, IngestError> {
        let at = self.client.clock().utc_now();
        self.snapshot_wiki_at(wiki, window, aux, at)
    }

    /// Fetches everything for one wiki. Only a site-statistics failure is
    /// fatal; other failures leave the section absent and add a warning.
    pub fn snapshot_wiki_at(
        &self,
        wiki: &WikiId,
        window: Window,
        aux: &AuxiliaryData,
        captured_at: DateTime<Utc>,
    ) -> Result<WikiSnapshot, IngestError> {
        let lock = self.wiki_locks.lock().unwrap().entry(wiki.clone()).or_default().clone();
        let _serialized = lock.lock().unwrap();

        let hard = |e: IngestError| IngestError::HardFailure { wiki: wiki.clone(), source: Box::new(e) };
        let mut site_stats = self.fetcher.fetch_site_statistics(wiki).map_err(hard)?;
        site_stats
            .validate()
            .map_err(|e| hard(IngestError::Parse { context: "site statistics".into(), message: e.to_string() }))?;
        let mut warnings = Vec::new();
        let curated = aux.curated.get(wiki);

        if let Some(category) = curated.and_then(|c| c.stub_category.as_deref()) {
            match self.fetcher.fetch_category_size(wiki, category) {
                Ok(Some(n)) if n <= site_stats.articles => site_stats.stub_articles = Some(n),
                Ok(Some(n)) => warnings.push(format!("stub category {category} has {n} members, more than articles")),
                Ok(None) => warnings.push(format!("stub category {category} does not exist")),
                Err(e) => warnings.push(format!("stub count: {e}")),
            }
        }

        let mut group_counts = BTreeMap::new();
        for (key, active_only) in [(ELEVATED_GROUP_KEY, false), (ACTIVE_ELEVATED_GROUP_KEY, true)] {
            match self.fetcher.count_group_members(wiki, &ELEVATED_GROUPS, active_only) {
                Ok(n) => {
                    group_counts.insert(key.to_string(), n);
                }
                Err(e) => warnings.push(format!("user groups ({key}): {e}")),
            }
        }

        let mut governance = match self.fetcher.fetch_governance_stats(wiki, Some(site_stats.editors)) {
            Ok(g) => g,
            Err(e) => {
                warnings.push(format!("governance: {e}"));
                GovernanceStats { total_accounts: Some(site_stats.editors), ..Default::default() }
            }
        };
        if let Some(c) = curated {
            governance.patrolling_tools = c.patrolling_tools;
            governance.stewards_with_language = c.stewards_with_language;
            governance.steward_requests = c.steward_requests;
            governance.deletion_requests = c.deletion_requests;
        }

        let mut distributions = Vec::new();
        for month in window.months() {
            match self.fetcher.fetch_views_by_country(wiki, month) {
                Ok(d) => distributions.push(d),
                Err(e) => warnings.push(format!("views by country: {e}")),
            }
        }
        for month in window.months() {
            let mut summed: BTreeMap<CountryCode, f64> = BTreeMap::new();
            let mut any = false;
            for level in ActivityLevel::ALL {
                match self.fetcher.fetch_editors_by_country(wiki, month, level) {
                    Ok(d) => {
                        any = true;
                        for (k, v) in d.entries {
                            *summed.entry(k).or_insert(0.0) += v;
                        }
                    }
                    Err(e) => warnings.push(format!("editors by country: {e}")),
                }
            }
            if any {
                let d = CountryDistribution::new(Subject::ActiveEditors, Window::month(month), summed)
                    .expect("sums of valid magnitudes are valid");
                distributions.push(d);
            }
        }

        for w in &warnings {
            warn!("{wiki}: {w}");
        }
        let snapshot = WikiSnapshot {
            schema_version: SNAPSHOT_SCHEMA_VERSION,
            wiki: wiki.code().to_string(),
            family: wiki.family().to_string(),
            window,
            captured_at,
            site_stats,
            group_counts,
            governance_stats: governance,
            distributions,
            external_scores: aux.scores_for(wiki),
            warnings,
            fixture_origin: false,
        };
        snapshot
            .validate()
            .map_err(|e| hard(IngestError::Parse { context: "snapshot".into(), message: e.to_string() }))?;
        info!("{wiki}: captured {} distributions", snapshot.distributions.len());
        Ok(snapshot)
    }

    /// Snapshots several wikis concurrently, all stamped with one capture
    /// time. Duplicates are dropped; results come back sorted by wiki.
    pub fn snapshot_cohort(
        &self,
        wikis: &[WikiId],
        window: Window,
        aux: &AuxiliaryData,
        jobs: usize,
    ) -> Vec<(WikiId, Result<WikiSnapshot, IngestError>)> {
        let unique: Vec<WikiId> = wikis.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let at = self.client.clock().utc_now();
        let next = Mutex::new(unique.iter());
        let results = Mutex::new(Vec::with_capacity(unique.len()));
        thread::scope(|s| {
            for _ in 0..jobs.max(1).min(unique.len().max(1)) {
                s.spawn(|| loop {
                    let Some(wiki) = next.lock().unwrap().next() else { break };
                    let r = self.snapshot_wiki_at(wiki, window, aux, at);
                    results.lock().unwrap().push((wiki.clone(), r));
                });
            }
        });
        let mut out = results.into_inner().unwrap();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::clock::ManualClock;
    use crate::ingestion::transport::{HttpResponse, ReplayTransport};
    use std::time::Duration;

    const SITE: &str = r#"{"batchcomplete":true,"query":{"statistics":{"pages":1500000,"articles":500123,"edits":900000000,"users":2000000,"activeusers":4800,"admins":40,"images":0}}}"#;

    fn ingestor() -> (Arc<ReplayTransport>, Arc<ManualClock>, Ingestor) {
        let t = Arc::new(ReplayTransport::new());
        let clock = Arc::new(ManualClock::new("2021-05-01T00:00:00Z".parse().unwrap()));
        let policy = FetchPolicy::default();
        let ing = Ingestor::new(policy, t.clone(), clock.clone()).unwrap();
        (t, clock, ing)
    }

    fn seed_healthy(t: &ReplayTransport, f: &WikiFetcher, w: &WikiId, with_editors: bool) {
        t.push(&f.action_url(w, &[("meta", "siteinfo"), ("siprop", "statistics")], None), HttpResponse::new(200, SITE));
        let groups = ELEVATED_GROUPS.join("|");
        t.push(
            &f.action_url(w, &[("list", "allusers"), ("augroup", &groups), ("aulimit", "max")], None),
            HttpResponse::new(200, r#"{"query":{"allusers":[{"name":"A"},{"name":"B"},{"name":"C"}]}}"#),
        );
        t.push(
            &f.action_url(w, &[("list", "allusers"), ("augroup", &groups), ("aulimit", "max"), ("auactiveusers", "1")], None),
            HttpResponse::new(200, r#"{"query":{"allusers":[{"name":"A"}]}}"#),
        );
        t.push(
            &f.action_url(w, &[("list", "abusefilters"), ("abfprop", "id|status"), ("abflimit", "max")], None),
            HttpResponse::new(200, r#"{"query":{"abusefilters":[{"id":1,"enabled":true}]}}"#),
        );
        t.push(
            &f.action_url(w, &[("list", "blocks"), ("bkshow", "account"), ("bkprop", "id"), ("bklimit", "max")], None),
            HttpResponse::new(200, r#"{"query":{"blocks":[{"id":1},{"id":2}]}}"#),
        );
        let m = "2021-04".parse().unwrap();
        t.push(
            &f.views_url(w, m),
            HttpResponse::new(200, r#"{"items":[{"countries":[{"country":"JP","views_ceil":9100000},{"country":"US","views_ceil":230000}]}]}"#),
        );
        if with_editors {
            for level in ActivityLevel::ALL {
                t.push(
                    &f.editors_url(w, m, level),
                    HttpResponse::new(200, r#"{"items":[{"results":[{"country":"JP","editors-ceil":100}]}]}"#),
                );
            }
        }
    }

    #[test]
    fn healthy_snapshot_has_all_sections() {
        let (t, _, ing) = ingestor();
        let w = WikiId::wikipedia("xx").unwrap();
        seed_healthy(&t, &ing.fetcher, &w, true);
        let snap = ing.snapshot_wiki(&w, "2021-04".parse().unwrap(), &AuxiliaryData::default()).unwrap();
        assert!(snap.warnings.is_empty(), "{:?}", snap.warnings);
        assert_eq!(snap.group_counts[ELEVATED_GROUP_KEY], 3);
        assert_eq!(snap.group_counts[ACTIVE_ELEVATED_GROUP_KEY], 1);
        assert_eq!(snap.governance_stats.blocked_accounts, Some(2));
        assert_eq!(snap.distributions_of(Subject::Views).count(), 1);
        let ed = snap.summed_distribution(Subject::ActiveEditors).unwrap();
        // two levels of bucket 91..100
        approx::assert_relative_eq!(ed[&CountryCode::new("JP").unwrap()], 2.0 * (91.0f64 * 100.0).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn missing_editor_data_is_a_warning() {
        let (t, _, ing) = ingestor();
        let w = WikiId::wikipedia("xx").unwrap();
        seed_healthy(&t, &ing.fetcher, &w, false);
        let snap = ing.snapshot_wiki(&w, "2021-04".parse().unwrap(), &AuxiliaryData::default()).unwrap();
        assert!(snap.summed_distribution(Subject::ActiveEditors).is_none());
        assert_eq!(snap.warnings.len(), 2);
        assert!(snap.warnings[0].contains("no data"));
    }

    #[test]
    fn site_statistics_failure_is_hard() {
        let (_, _, ing) = ingestor();
        let w = WikiId::wikipedia("xx").unwrap();
        let err = ing.snapshot_wiki(&w, "2021-04".parse().unwrap(), &AuxiliaryData::default()).unwrap_err();
        assert!(matches!(err, IngestError::HardFailure { .. }));
    }

    #[test]
    fn replay_is_deterministic_and_spaced() {
        let run = || {
            let (t, clock, ing) = ingestor();
            let ws: Vec<WikiId> = ["xx", "yy", "xx"].iter().map(|c| WikiId::wikipedia(*c).unwrap()).collect();
            for w in &ws[..2] {
                seed_healthy(&t, &ing.fetcher, w, true);
            }
            let out = ing.snapshot_cohort(&ws, "2021-04".parse().unwrap(), &AuxiliaryData::default(), 4);
            assert_eq!(out.len(), 2);
            assert!(ing.client().telemetry().max_in_flight_observed <= ing.client().policy().max_in_flight);
            assert!(clock.sleeps().iter().all(|d| *d <= Duration::from_millis(200)));
            out.into_iter()
                .map(|(_, r)| crate::ingestion::fixture::to_fixture_json(&r.unwrap()))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
