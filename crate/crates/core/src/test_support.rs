//! Shared builders for unit tests.

use std::collections::BTreeMap;

use crate::model::{
    CountryCode, CountryDistribution, GovernanceStats, SiteStats, Subject, WikiSnapshot, Window,
    ACTIVE_ELEVATED_GROUP_KEY, ELEVATED_GROUP_KEY, SNAPSHOT_SCHEMA_VERSION,
};

pub fn cc(c: &str) -> CountryCode {
    CountryCode::new(c).unwrap()
}

pub fn snapshot(code: &str) -> WikiSnapshot {
    let window: Window = "2021-04".parse().unwrap();
    WikiSnapshot {
        schema_version: SNAPSHOT_SCHEMA_VERSION,
        wiki: code.into(),
        family: "wikipedia".into(),
        window,
        captured_at: "2021-05-01T00:00:00Z".parse().unwrap(),
        site_stats: SiteStats {
            articles: 1_000_000,
            total_pages: 4_000_000,
            edits: 50_000_000,
            editors: 10_000,
            active_editors: 4800,
            stub_articles: Some(250_000),
        },
        group_counts: [(ELEVATED_GROUP_KEY.to_string(), 40), (ACTIVE_ELEVATED_GROUP_KEY.to_string(), 12)].into(),
        governance_stats: GovernanceStats {
            abusefilter_rules: Some(41),
            blocked_accounts: Some(230),
            total_accounts: Some(10_000),
            ..Default::default()
        },
        distributions: vec![
            CountryDistribution::new(Subject::Views, window, [(cc("JP"), 9.1e8), (cc("US"), 2.3e7)].into()).unwrap(),
            CountryDistribution::new(Subject::ActiveEditors, window, [(cc("JP"), 300.0), (cc("US"), 100.0)].into())
                .unwrap(),
        ],
        external_scores: BTreeMap::new(),
        warnings: vec![],
        fixture_origin: true,
    }
}

