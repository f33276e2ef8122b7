//! Shared domain types. Everything here is plain data: immutable after
//! construction, `Send + Sync`, and serializable.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, TimeZone, Utc};
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::metrics::EntropyValue;
use crate::model::registry::ValueKind;
use crate::model::taxonomy::RiskCategory;

/// Version of the snapshot document layout.
pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid month `{0}` (expected YYYY-MM)")]
    InvalidMonth(String),
    #[error("invalid window `{0}`")]
    InvalidWindow(String),
    #[error("invalid country code `{0}` (expected two uppercase letters)")]
    InvalidCountry(String),
    #[error("invalid wiki identifier `{0}`")]
    InvalidWiki(String),
    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),
    #[error("invalid magnitude {value} for {key}")]
    InvalidMagnitude { key: String, value: f64 },
}

// ---------------------------------------------------------------------------
// Wiki identity
// ---------------------------------------------------------------------------

/// A wiki is identified by its language code and project family, e.g.
/// `ja` + `wikipedia`. Codes are taken as the upstream API reports them and
/// are not checked against ISO 639 (`ceb`, `war`, `arz` are valid).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WikiId {
    code: String,
    family: String,
}

fn valid_segment(s: &str, allow_digits_and_dash: bool) -> bool {
    !s.is_empty()
        && s.chars().all(|c| {
            c.is_ascii_lowercase() || (allow_digits_and_dash && (c.is_ascii_digit() || c == '-'))
        })
}

impl WikiId {
    pub const DEFAULT_FAMILY: &'static str = "wikipedia";

    pub fn new(code: impl Into<String>, family: impl Into<String>) -> Result<Self, ModelError> {
        let code = code.into();
        let family = family.into();
        if !valid_segment(&code, true) || !valid_segment(&family, false) {
            return Err(ModelError::InvalidWiki(format!("{code}.{family}")));
        }
        Ok(WikiId { code, family })
    }

    pub fn wikipedia(code: impl Into<String>) -> Result<Self, ModelError> {
        WikiId::new(code, Self::DEFAULT_FAMILY)
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    /// Host serving this wiki's action API.
    pub fn host(&self) -> String {
        format!("{}.{}.org", self.code, self.family)
    }
}

impl fmt::Display for WikiId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.code, self.family)
    }
}

impl FromStr for WikiId {
    type Err = ModelError;

    /// Accepts `code.family` or a bare `code` (family defaults to wikipedia).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('.') {
            Some((code, family)) => WikiId::new(code, family),
            None => WikiId::wikipedia(s),
        }
    }
}

impl Serialize for WikiId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WikiId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Months and windows
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Month {
    year: i32,
    month: u32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self, ModelError> {
        if !(1..=12).contains(&month) || !(1000..=9999).contains(&year) {
            return Err(ModelError::InvalidMonth(format!("{year}-{month}")));
        }
        Ok(Month { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    pub fn succ(self) -> Month {
        if self.month == 12 {
            Month { year: self.year + 1, month: 1 }
        } else {
            Month { year: self.year, month: self.month + 1 }
        }
    }

    pub fn of(ts: DateTime<Utc>) -> Month {
        Month { year: ts.year(), month: ts.month() }
    }

    /// Midnight UTC on the first day of the month.
    pub fn first_instant(self) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(self.year, self.month, 1, 0, 0, 0).single().expect("valid month")
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Month {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::InvalidMonth(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 || !y.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        Month::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?).map_err(|_| bad())
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Half-open month range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Window {
    start: Month,
    end: Month,
}

impl Window {
    pub fn new(start: Month, end: Month) -> Result<Self, ModelError> {
        if end <= start {
            return Err(ModelError::InvalidWindow(format!("{start}..{end}")));
        }
        Ok(Window { start, end })
    }

    pub fn month(m: Month) -> Self {
        Window { start: m, end: m.succ() }
    }

    pub fn start(&self) -> Month {
        self.start
    }

    pub fn end(&self) -> Month {
        self.end
    }

    pub fn months(&self) -> impl Iterator<Item = Month> + '_ {
        std::iter::successors(Some(self.start), |m| Some(m.succ())).take_while(move |m| *m < self.end)
    }

    pub fn contains(&self, m: Month) -> bool {
        self.start <= m && m < self.end
    }

    /// True when `other` lies entirely inside this window.
    pub fn covers(&self, other: &Window) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for Window {
    /// `2021-04` for single months, `2018-11..2021-05` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.end == self.start.succ() {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}..{}", self.start, self.end)
        }
    }
}

impl FromStr for Window {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once("..") {
            Some((a, b)) => {
                Window::new(a.parse()?, b.parse()?).map_err(|_| ModelError::InvalidWindow(s.into()))
            }
            None => Ok(Window::month(s.parse()?)),
        }
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            start: Month,
            end: Month,
        }
        let raw = Raw::deserialize(d)?;
        Window::new(raw.start, raw.end).map_err(de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Country distributions
// ---------------------------------------------------------------------------

/// ISO 3166-1 alpha-2 country code, always uppercase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CountryCode(String);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self, ModelError> {
        if code.len() == 2 && code.bytes().all(|b| b.is_ascii_uppercase()) {
            Ok(CountryCode(code.to_string()))
        } else {
            Err(ModelError::InvalidCountry(code.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for CountryCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for CountryCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CountryCode::new(&s).map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Edits,
    Views,
    ActiveEditors,
}

/// Magnitudes per country for one wiki over one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryDistribution {
    pub subject: Subject,
    pub window: Window,
    #[serde(deserialize_with = "unique_magnitudes")]
    pub entries: BTreeMap<CountryCode, f64>,
}

impl CountryDistribution {
    pub fn new(
        subject: Subject,
        window: Window,
        entries: BTreeMap<CountryCode, f64>,
    ) -> Result<Self, ModelError> {
        for (k, v) in &entries {
            check_magnitude(k.as_str(), *v)?;
        }
        Ok(CountryDistribution { subject, window, entries })
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        !self.entries.values().any(|v| *v > 0.0)
    }
}

fn check_magnitude(key: &str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidMagnitude { key: key.to_string(), value: v })
    }
}

/// Deserializes a country map, rejecting duplicate keys and invalid magnitudes
/// (a plain `BTreeMap` would silently keep the last duplicate).
fn unique_magnitudes<'de, D>(d: D) -> Result<BTreeMap<CountryCode, f64>, D::Error>
where
    D: Deserializer<'de>,
{
    struct V;
    impl<'de> Visitor<'de> for V {
        type Value = BTreeMap<CountryCode, f64>;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a map of country code to non-negative magnitude")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
            let mut out = BTreeMap::new();
            while let Some((k, v)) = map.next_entry::<CountryCode, f64>()? {
                check_magnitude(k.as_str(), v).map_err(de::Error::custom)?;
                if out.insert(k.clone(), v).is_some() {
                    return Err(de::Error::custom(format!("duplicate country code {k}")));
                }
            }
            Ok(out)
        }
    }
    d.deserialize_map(V)
}

// ---------------------------------------------------------------------------
// Raw per-wiki facts
// ---------------------------------------------------------------------------

/// Site-wide counters. `active_editors` follows the upstream 30-day definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteStats {
    pub articles: u64,
    pub total_pages: u64,
    pub edits: u64,
    pub editors: u64,
    pub active_editors: u64,
    #[serde(default)]
    pub stub_articles: Option<u64>,
}

impl SiteStats {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.articles > self.total_pages {
            return Err(ModelError::InconsistentCounts(format!(
                "articles {} > total_pages {}",
                self.articles, self.total_pages
            )));
        }
        if self.active_editors > self.editors {
            return Err(ModelError::InconsistentCounts(format!(
                "active_editors {} > editors {}",
                self.active_editors, self.editors
            )));
        }
        if let Some(stubs) = self.stub_articles {
            if stubs > self.articles {
                return Err(ModelError::InconsistentCounts(format!(
                    "stub_articles {stubs} > articles {}",
                    self.articles
                )));
            }
        }
        Ok(())
    }
}

/// Governance counters. Anything a wiki cannot report stays `None`; a missing
/// capability is never the same as zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernanceStats {
    #[serde(default)]
    pub abusefilter_rules: Option<u64>,
    #[serde(default)]
    pub blocked_accounts: Option<u64>,
    #[serde(default)]
    pub total_accounts: Option<u64>,
    #[serde(default)]
    pub deletion_requests: Option<u64>,
    #[serde(default)]
    pub steward_requests: Option<u64>,
    /// Operator-curated.
    #[serde(default)]
    pub patrolling_tools: Option<u64>,
    /// Operator-curated.
    #[serde(default)]
    pub stewards_with_language: Option<u64>,
}

impl GovernanceStats {
    pub fn validate(&self) -> Result<(), ModelError> {
        if let (Some(b), Some(t)) = (self.blocked_accounts, self.total_accounts) {
            if b > t {
                return Err(ModelError::InconsistentCounts(format!(
                    "blocked_accounts {b} > total_accounts {t}"
                )));
            }
        }
        Ok(())
    }
}

/// An opaque per-wiki table from an external score provider.
pub type ScoreTable = BTreeMap<String, f64>;

/// All raw facts captured for one wiki and one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WikiSnapshot {
    pub schema_version: u32,
    /// Language code as reported upstream.
    pub wiki: String,
    pub family: String,
    pub window: Window,
    pub captured_at: DateTime<Utc>,
    pub site_stats: SiteStats,
    pub group_counts: BTreeMap<String, u64>,
    pub governance_stats: GovernanceStats,
    pub distributions: Vec<CountryDistribution>,
    pub external_scores: BTreeMap<String, ScoreTable>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub fixture_origin: bool,
}

impl WikiSnapshot {
    pub fn id(&self) -> WikiId {
        WikiId::new(self.wiki.clone(), self.family.clone())
            .expect("snapshot wiki identity validated on construction")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        WikiId::new(self.wiki.clone(), self.family.clone())?;
        self.site_stats.validate()?;
        self.governance_stats.validate()?;
        for d in &self.distributions {
            for (k, v) in &d.entries {
                check_magnitude(k.as_str(), *v)?;
            }
        }
        for (provider, table) in &self.external_scores {
            for (k, v) in table {
                if !v.is_finite() {
                    return Err(ModelError::InvalidMagnitude {
                        key: format!("{provider}/{k}"),
                        value: *v,
                    });
                }
            }
        }
        Ok(())
    }

    /// Distributions of one subject, in snapshot order.
    pub fn distributions_of(&self, subject: Subject) -> impl Iterator<Item = &CountryDistribution> {
        self.distributions.iter().filter(move |d| d.subject == subject)
    }

    /// Sum of all distributions of `subject` across the window's months, or
    /// `None` if the snapshot carries none.
    pub fn summed_distribution(&self, subject: Subject) -> Option<BTreeMap<CountryCode, f64>> {
        let mut out: Option<BTreeMap<CountryCode, f64>> = None;
        for d in self.distributions_of(subject) {
            let acc = out.get_or_insert_with(BTreeMap::new);
            for (k, v) in &d.entries {
                *acc.entry(k.clone()).or_insert(0.0) += v;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Computed outputs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Value {
    Count { value: u64 },
    /// Either bounded in [0,1] or unbounded, depending on the indicator.
    Ratio { value: f64 },
    Distribution { entries: BTreeMap<String, f64> },
    Entropy(EntropyValue),
    Score {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coverage: Option<f64>,
    },
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Count { .. } => ValueKind::Count,
            Value::Ratio { .. } => ValueKind::Ratio,
            Value::Distribution { .. } => ValueKind::Distribution,
            Value::Entropy(_) => ValueKind::Entropy,
            Value::Score { .. } => ValueKind::Score,
        }
    }

    /// Scalar used for cross-wiki comparison. Distributions have none.
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Value::Count { value } => Some(*value as f64),
            Value::Ratio { value } | Value::Score { value, .. } => Some(*value),
            Value::Entropy(e) => Some(e.nats),
            Value::Distribution { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub snapshot_ids: Vec<String>,
    pub method_version: u32,
    /// As-of time of the inputs (latest snapshot capture), so that identical
    /// inputs always produce identical outputs.
    pub computed_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorValue {
    pub indicator_id: String,
    pub wiki: WikiId,
    pub window: Window,
    pub value: Value,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub indicator_id: String,
    pub risk_percentile: f64,
}

/// Aggregate risk of one wiki in one category. Only ever constructed with a
/// non-empty contribution list; a category with no data is simply absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRiskScore {
    pub wiki: WikiId,
    pub category: RiskCategory,
    pub score: f64,
    pub contributing: Vec<Contribution>,
    pub cohort: Vec<WikiId>,
    /// Fraction of the category's scorable indicators that contributed.
    pub coverage: f64,
}
