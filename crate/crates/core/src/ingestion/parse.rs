//! Pure parsers for upstream payloads. No I/O.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IngestError;
use crate::model::{CountryCode, CountryDistribution, SiteStats, Subject, Window};

fn parse_err(context: &str, message: impl Into<String>) -> IngestError {
    IngestError::Parse { context: context.to_string(), message: message.into() }
}

/// A possibly privacy-bucketed count: either an exact value or a `lo..hi`
/// range, with a point estimate for downstream arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketedCount {
    pub raw_label: String,
    pub estimate: f64,
    pub lo: u64,
    pub hi: u64,
}

/// Exact labels pass through; ranges use the geometric mean of their bounds,
/// which suits the roughly log-spaced upstream buckets.
pub fn bucket_estimate(raw_label: &str) -> Result<BucketedCount, IngestError> {
    const CTX: &str = "bucket label";
    let label = raw_label.trim();
    let num = |s: &str| -> Result<u64, IngestError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(parse_err(CTX, format!("malformed label `{raw_label}`")));
        }
        s.parse().map_err(|_| parse_err(CTX, format!("out of range label `{raw_label}`")))
    };
    match label.split_once("..") {
        Some((lo, hi)) => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            if lo < 1 || lo > hi {
                return Err(parse_err(CTX, format!("range `{raw_label}` needs 1 <= lo <= hi")));
            }
            Ok(BucketedCount {
                raw_label: raw_label.to_string(),
                estimate: ((lo as f64) * (hi as f64)).sqrt(),
                lo,
                hi,
            })
        }
        None => {
            let n = num(label)?;
            Ok(BucketedCount { raw_label: raw_label.to_string(), estimate: n as f64, lo: n, hi: n })
        }
    }
}

fn as_count(v: &Value) -> Option<u64> {
    v.as_u64().or_else(|| {
        let f = v.as_f64()?;
        (f >= 0.0 && f.fract() == 0.0 && f < 1.8e19).then_some(f as u64)
    })
}

/// Error object of an action API response, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiErrorInfo {
    pub code: String,
    pub info: String,
}

pub fn api_error(v: &Value) -> Option<ApiErrorInfo> {
    let e = v.get("error")?;
    Some(ApiErrorInfo {
        code: e.get("code").and_then(Value::as_str).unwrap_or("unknown").to_string(),
        info: e.get("info").and_then(Value::as_str).unwrap_or_default().to_string(),
    })
}

pub fn parse_json(context: &str, body: &[u8]) -> Result<Value, IngestError> {
    serde_json::from_slice(body).map_err(|e| parse_err(context, format!("invalid JSON: {e}")))
}

/// `meta=siteinfo&siprop=statistics`. `stub_articles` is left unset.
pub fn parse_site_statistics(body: &[u8]) -> Result<SiteStats, IngestError> {
    const CTX: &str = "site statistics";
    let v = parse_json(CTX, body)?;
    if let Some(e) = api_error(&v) {
        return Err(parse_err(CTX, format!("API error {}: {}", e.code, e.info)));
    }
    let stats = v
        .pointer("/query/statistics")
        .ok_or_else(|| parse_err(CTX, "missing field `query.statistics`"))?;
    let field = |name: &str| -> Result<u64, IngestError> {
        let raw = stats.get(name).ok_or_else(|| parse_err(CTX, format!("missing field `{name}`")))?;
        as_count(raw).ok_or_else(|| parse_err(CTX, format!("field `{name}` is not a non-negative integer")))
    };
    let s = SiteStats {
        articles: field("articles")?,
        total_pages: field("pages")?,
        edits: field("edits")?,
        editors: field("users")?,
        active_editors: field("activeusers")?,
        stub_articles: None,
    };
    s.validate().map_err(|e| parse_err(CTX, e.to_string()))?;
    Ok(s)
}

/// `prop=categoryinfo` for a single title; `None` when the category is missing.
pub fn parse_category_size(body: &[u8]) -> Result<Option<u64>, IngestError> {
    const CTX: &str = "category info";
    let v = parse_json(CTX, body)?;
    if let Some(e) = api_error(&v) {
        return Err(parse_err(CTX, format!("API error {}: {}", e.code, e.info)));
    }
    let pages = v
        .pointer("/query/pages")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(CTX, "missing field `query.pages`"))?;
    let Some(page) = pages.first() else { return Ok(None) };
    if page.get("missing").is_some() {
        return Ok(None);
    }
    match page.pointer("/categoryinfo/pages") {
        Some(n) => as_count(n).map(Some).ok_or_else(|| parse_err(CTX, "categoryinfo.pages is not a count")),
        None => Ok(None),
    }
}

/// One page of a `list=` query: the items plus continuation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ListPage {
    pub items: Vec<Value>,
    pub continuation: Option<BTreeMap<String, String>>,
}

pub fn parse_list_page(context: &str, list: &str, body: &[u8]) -> Result<Result<ListPage, ApiErrorInfo>, IngestError> {
    let v = parse_json(context, body)?;
    if let Some(e) = api_error(&v) {
        return Ok(Err(e));
    }
    let items = match v.get("query").and_then(|q| q.get(list)) {
        Some(Value::Array(items)) => items.clone(),
        Some(_) => return Err(parse_err(context, format!("`query.{list}` is not an array"))),
        // an empty result may omit the query block entirely
        None if v.get("batchcomplete").is_some() => Vec::new(),
        None => return Err(parse_err(context, format!("missing field `query.{list}`"))),
    };
    let continuation = match v.get("continue") {
        Some(Value::Object(m)) => Some(
            m.iter()
                .map(|(k, v)| {
                    let s = match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    (k.clone(), s)
                })
                .collect(),
        ),
        Some(_) => return Err(parse_err(context, "`continue` is not an object")),
        None => None,
    };
    Ok(Ok(ListPage { items, continuation }))
}

/// Number of enabled filters in an `abusefilters` list page.
pub fn count_enabled_filters(items: &[Value]) -> Result<u64, IngestError> {
    let mut n = 0;
    for item in items {
        let enabled = match item.get("enabled") {
            Some(Value::Bool(b)) => *b,
            // formatversion=1 signals true flags with an empty string
            Some(Value::String(_)) => true,
            None => false,
            Some(_) => return Err(parse_err("abuse filters", "`enabled` has an unexpected type")),
        };
        let deleted = matches!(item.get("deleted"), Some(Value::Bool(true)) | Some(Value::String(_)));
        if enabled && !deleted {
            n += 1;
        }
    }
    Ok(n)
}

fn country_entries<'a>(
    context: &str,
    v: &'a Value,
    list_key: &str,
) -> Result<&'a [Value], IngestError> {
    let items = v
        .get("items")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(context, "missing field `items`"))?;
    let Some(first) = items.first() else { return Ok(&[]) };
    first
        .get(list_key)
        .and_then(Value::as_array)
        .map(Vec::as_slice)
        .ok_or_else(|| parse_err(context, format!("missing field `items[0].{list_key}`")))
}

fn magnitude(context: &str, v: &Value) -> Result<f64, IngestError> {
    match v {
        Value::String(label) => Ok(bucket_estimate(label)?.estimate),
        Value::Number(n) => n
            .as_f64()
            .filter(|f| f.is_finite() && *f >= 0.0)
            .ok_or_else(|| parse_err(context, format!("invalid magnitude {n}"))),
        other => Err(parse_err(context, format!("invalid magnitude {other}"))),
    }
}

fn build_distribution(
    context: &str,
    subject: Subject,
    window: Window,
    entries: &[Value],
    value_of: impl Fn(&Value) -> Result<Option<f64>, IngestError>,
) -> Result<CountryDistribution, IngestError> {
    let mut map = BTreeMap::new();
    for e in entries {
        let code = e
            .get("country")
            .and_then(Value::as_str)
            .ok_or_else(|| parse_err(context, "entry without `country`"))?;
        // upstream reports unattributable traffic as "--"
        if code == "--" {
            continue;
        }
        let country = CountryCode::new(code).map_err(|e| parse_err(context, e.to_string()))?;
        let Some(m) = value_of(e)? else {
            return Err(parse_err(context, format!("entry for {code} has no value")));
        };
        if map.insert(country, m).is_some() {
            return Err(parse_err(context, format!("duplicate country code {code}")));
        }
    }
    if map.is_empty() {
        return Err(IngestError::NoData { what: format!("{context} {window}") });
    }
    CountryDistribution::new(subject, window, map).map_err(|e| parse_err(context, e.to_string()))
}

/// Pageviews-by-country payload (`items[0].countries[]`, each with `views` or
/// `views_ceil`, numeric or a bucket label).
pub fn parse_views_by_country(body: &[u8], window: Window) -> Result<CountryDistribution, IngestError> {
    const CTX: &str = "views by country";
    let v = parse_json(CTX, body)?;
    let entries = country_entries(CTX, &v, "countries")?;
    build_distribution(CTX, Subject::Views, window, entries, |e| {
        e.get("views").or_else(|| e.get("views_ceil")).map(|m| magnitude(CTX, m)).transpose()
    })
}

/// Editors-by-country payload (`items[0].results[]`). `editors` may be an
/// exact number or a bucket label; `editors-ceil` is the upper bound of a
/// width-10 bucket.
pub fn parse_editors_by_country(body: &[u8], window: Window) -> Result<CountryDistribution, IngestError> {
    const CTX: &str = "editors by country";
    let v = parse_json(CTX, body)?;
    let entries = country_entries(CTX, &v, "results")?;
    build_distribution(CTX, Subject::ActiveEditors, window, entries, |e| {
        if let Some(m) = e.get("editors") {
            return magnitude(CTX, m).map(Some);
        }
        match e.get("editors-ceil") {
            Some(c) => {
                let ceil = as_count(c).ok_or_else(|| parse_err(CTX, "`editors-ceil` is not a count"))?;
                if ceil == 0 {
                    return Ok(Some(0.0));
                }
                let lo = ceil.saturating_sub(9).max(1);
                Ok(Some(bucket_estimate(&format!("{lo}..{ceil}"))?.estimate))
            }
            None => Ok(None),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn window() -> Window {
        "2021-04".parse().unwrap()
    }

    #[test]
    fn bucket_examples() {
        let b = bucket_estimate("100..999").unwrap();
        assert_abs_diff_eq!(b.estimate, (100.0f64 * 999.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.estimate, 316.069612, epsilon = 1e-6);
        assert_eq!((b.lo, b.hi), (100, 999));
        assert_eq!(bucket_estimate("1..9").unwrap().estimate, 3.0);
        let e = bucket_estimate("37").unwrap();
        assert_eq!((e.estimate, e.lo, e.hi), (37.0, 37, 37));
        assert_eq!(bucket_estimate("5").unwrap().estimate, 5.0);
        for bad in ["100-", "0..0", "9..1", "..5", "5..", "a..b", "", "-3", "1.5"] {
            assert!(matches!(bucket_estimate(bad), Err(IngestError::Parse { .. })), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn bucket_estimate_monotone(lo in 1u64..100_000, w in 0u64..100_000, dlo in 0u64..1000, dhi in 0u64..1000) {
            let hi = lo + w;
            let a = bucket_estimate(&format!("{lo}..{hi}")).unwrap();
            let (lo2, hi2) = (lo + dlo, (hi + dhi).max(lo + dlo));
            let b = bucket_estimate(&format!("{lo2}..{hi2}")).unwrap();
            prop_assert!(b.estimate >= a.estimate);
            prop_assert!(a.lo as f64 <= a.estimate + 1e-9 && a.estimate <= a.hi as f64 + 1e-9);
        }
    }

    #[test]
    fn site_statistics_fields() {
        let body = br#"{"batchcomplete":true,"query":{"statistics":{"pages":1500000,"articles":500123,"edits":9e8,"images":10,"users":2000000,"activeusers":4800,"admins":40,"jobs":0}}}"#;
        let s = parse_site_statistics(body).unwrap();
        assert_eq!(s.articles, 500_123);
        assert_eq!(s.total_pages, 1_500_000);
        assert_eq!(s.edits, 900_000_000);
        assert_eq!(s.editors, 2_000_000);
        assert_eq!(s.active_editors, 4800);
        assert_eq!(s.stub_articles, None);
    }

    #[test]
    fn site_statistics_missing_field_is_named() {
        let body = br#"{"query":{"statistics":{"pages":10,"articles":5,"edits":9,"users":3}}}"#;
        let err = parse_site_statistics(body).unwrap_err();
        assert!(err.to_string().contains("activeusers"), "{err}");
    }

    #[test]
    fn views_payload() {
        let body = br#"{"items":[{"project":"ja.wikipedia","access":"all-access","year":"2021","month":"04","countries":[
            {"country":"JP","views":910000000,"rank":1},{"country":"US","views_ceil":23000000,"rank":2},{"country":"--","views":5}]}]}"#;
        let d = parse_views_by_country(body, window()).unwrap();
        assert_eq!(d.subject, Subject::Views);
        assert_eq!(d.entries.len(), 2);
        assert_eq!(d.entries[&CountryCode::new("US").unwrap()], 23_000_000.0);
    }

    #[test]
    fn views_empty_and_duplicates() {
        let empty = br#"{"items":[{"countries":[]}]}"#;
        assert!(matches!(parse_views_by_country(empty, window()), Err(IngestError::NoData { .. })));
        let dup = br#"{"items":[{"countries":[{"country":"JP","views":1},{"country":"JP","views":2}]}]}"#;
        assert!(matches!(parse_views_by_country(dup, window()), Err(IngestError::Parse { .. })));
        let lower = br#"{"items":[{"countries":[{"country":"jp","views":1}]}]}"#;
        assert!(matches!(parse_views_by_country(lower, window()), Err(IngestError::Parse { .. })));
    }

    #[test]
    fn editors_payload_buckets() {
        let body = br#"{"items":[{"results":[{"country":"JP","editors":"100..999"},{"country":"US","editors":"37"},{"country":"FR","editors-ceil":20}]}]}"#;
        let d = parse_editors_by_country(body, window()).unwrap();
        assert_eq!(d.subject, Subject::ActiveEditors);
        assert_abs_diff_eq!(d.entries[&CountryCode::new("JP").unwrap()], 316.069612, epsilon = 1e-6);
        assert_eq!(d.entries[&CountryCode::new("US").unwrap()], 37.0);
        assert_abs_diff_eq!(d.entries[&CountryCode::new("FR").unwrap()], (11.0f64 * 20.0).sqrt(), epsilon = 1e-12);
        let bad = br#"{"items":[{"results":[{"country":"JP","editors":"100-"}]}]}"#;
        assert!(matches!(parse_editors_by_country(bad, window()), Err(IngestError::Parse { .. })));
    }

    #[test]
    fn list_pages_and_errors() {
        let body = br#"{"continue":{"aufrom":"Bob","continue":"-||"},"query":{"allusers":[{"name":"A"},{"name":"B"}]}}"#;
        let page = parse_list_page("users", "allusers", body).unwrap().unwrap();
        assert_eq!(page.items.len(), 2);
        assert_eq!(page.continuation.unwrap()["aufrom"], "Bob");
        let err = br#"{"error":{"code":"badvalue","info":"Unrecognized value"}}"#;
        assert_eq!(parse_list_page("users", "allusers", err).unwrap().unwrap_err().code, "badvalue");
        assert!(parse_list_page("users", "allusers", b"{}").is_err());
    }

    #[test]
    fn enabled_filter_count() {
        let items: Vec<Value> = serde_json::from_str(
            r#"[{"id":1,"enabled":true},{"id":2,"enabled":false},{"id":3,"enabled":""},{"id":4,"enabled":true,"deleted":true},{"id":5}]"#,
        )
        .unwrap();
        assert_eq!(count_enabled_filters(&items).unwrap(), 2);
    }

    #[test]
    fn category_size() {
        let body = br#"{"query":{"pages":[{"title":"Category:Stubs","categoryinfo":{"size":12,"pages":10,"files":0,"subcats":2}}]}}"#;
        assert_eq!(parse_category_size(body).unwrap(), Some(10));
        let missing = br#"{"query":{"pages":[{"title":"Category:X","missing":true}]}}"#;
        assert_eq!(parse_category_size(missing).unwrap(), None);
    }
}
