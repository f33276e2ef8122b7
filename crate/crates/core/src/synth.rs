//! Seeded synthetic snapshots for property tests and benchmarks. The same seed
//! always yields the same cohort.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::model::{
    CountryCode, CountryDistribution, GovernanceStats, Month, SiteStats, Subject, WikiSnapshot, Window,
    ACTIVE_ELEVATED_GROUP_KEY, ELEVATED_GROUP_KEY, SNAPSHOT_SCHEMA_VERSION,
};

const COUNTRIES: [&str; 40] = [
    "AR", "AU", "BD", "BR", "CA", "CN", "CO", "DE", "EG", "ES", "FI", "FR", "GB", "ID", "IN", "IQ", "IR", "IT", "JP",
    "KR", "MA", "MX", "NG", "NL", "NO", "PE", "PH", "PK", "PL", "PT", "RS", "RU", "SA", "SE", "TR", "UA", "US", "VE",
    "VN", "ZA",
];

/// Wiki code for cohort member `i`: `aa`, `ab`, ... `zz`.
pub fn code(i: usize) -> String {
    let a = (b'a' + (i / 26 % 26) as u8) as char;
    let b = (b'a' + (i % 26) as u8) as char;
    format!("{a}{b}")
}

fn distribution(rng: &mut StdRng, subject: Subject, month: Month, scale: f64) -> CountryDistribution {
    let support = rng.random_range(1..=COUNTRIES.len());
    let skew: f64 = rng.random_range(0.0..3.0);
    let mut entries = BTreeMap::new();
    for (rank, c) in COUNTRIES.iter().take(support).enumerate() {
        let m = (scale * rng.random_range(0.5..1.5) / (rank as f64 + 1.0).powf(skew)).round().max(1.0);
        entries.insert(CountryCode::new(c).expect("static code"), m);
    }
    CountryDistribution::new(subject, Window::month(month), entries).expect("positive magnitudes")
}

/// One random but internally consistent snapshot for `window`.
pub fn snapshot(rng: &mut StdRng, code: &str, window: Window) -> WikiSnapshot {
    let articles: u64 = rng.random_range(10_000..5_000_000);
    let total_pages = articles + rng.random_range(0..4 * articles);
    let editors: u64 = rng.random_range(100..1_000_000);
    let active_editors = rng.random_range(1..=editors);
    let elevated = rng.random_range(0..=editors.min(2_000));
    let stub_articles = rng.random_bool(0.8).then(|| rng.random_range(0..=articles));
    let abusefilter_rules = rng.random_bool(0.9).then(|| rng.random_range(0..300));
    let blocked = rng.random_range(0..=editors);
    let mut distributions = Vec::new();
    let view_scale = rng.random_range(1e3..1e8);
    let editor_scale = rng.random_range(1.0..1e4);
    for m in window.months() {
        distributions.push(distribution(rng, Subject::Views, m, view_scale));
        if rng.random_bool(0.95) {
            distributions.push(distribution(rng, Subject::ActiveEditors, m, editor_scale));
        }
    }
    let captured_at: DateTime<Utc> = window.end().first_instant();
    WikiSnapshot {
        schema_version: SNAPSHOT_SCHEMA_VERSION,
        wiki: code.to_string(),
        family: "wikipedia".into(),
        window,
        captured_at,
        site_stats: SiteStats {
            articles,
            total_pages,
            edits: rng.random_range(articles..articles * 200),
            editors,
            active_editors,
            stub_articles,
        },
        group_counts: [
            (ELEVATED_GROUP_KEY.to_string(), elevated),
            (ACTIVE_ELEVATED_GROUP_KEY.to_string(), rng.random_range(0..=elevated)),
        ]
        .into(),
        governance_stats: GovernanceStats {
            abusefilter_rules,
            blocked_accounts: Some(blocked),
            total_accounts: Some(editors),
            ..Default::default()
        },
        distributions,
        external_scores: BTreeMap::new(),
        warnings: vec![],
        fixture_origin: true,
    }
}

/// `n` snapshots of distinct wikis over `window`, derived from `seed`.
pub fn cohort(seed: u64, n: usize, window: Window) -> Vec<WikiSnapshot> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n).map(|i| snapshot(&mut rng, &code(i), window)).collect()
}
