//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use observatory_api::{router, AppState};
use observatory_core::canonical::to_canonical_string;
use observatory_core::engine::{
    assess, entropy_scatter, rank_wikis, risk_percentile, EngineContext, IndicatorSet, RiskMatrix, ScatterResult,
    DEFAULT_MIN_ARTICLES,
};
use observatory_core::ingestion::fixture::{fixture_file_name, load_fixture_dir};
use observatory_core::ingestion::{
    recorded_wikis, replay_epoch, to_fixture_json, AuxiliaryData, Clock, FetchPolicy, HttpRequest, HttpResponse,
    Ingestor, ManualClock, ReplayTransport, Transport,
};
use observatory_core::ingestion::transport::TransportError;
use observatory_core::metrics::{linear_fit, normalize, shannon_entropy};
use observatory_core::storage::{Document, FaultPoint, Store, StoreKey};
use observatory_core::{synth, CategoryInfo, Registry, RiskPolarity, WikiId, WikiSnapshot, Window};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tower::ServiceExt;

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixtures() -> PathBuf {
    root().join("fixtures")
}

fn april() -> Window {
    "2021-04".parse().unwrap()
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within_budget(start: Instant, budget: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure!(took < budget, "took {took:.2?}, budget {budget:?}");
    Ok(took)
}

fn run_cases<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(PropConfig { cases, failure_persistence: None, ..PropConfig::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------

fn entropy_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=200usize);
        let masses: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..1e6)).collect();
        let total: f64 = masses.iter().sum();
        let direct: f64 = -masses.iter().map(|m| m / total).map(|p| p * p.ln()).sum::<f64>();
        let s = shannon_entropy(&normalize(masses.iter().copied().enumerate()).unwrap()).nats;
        worst = worst.max((s - direct).abs());
    }
    ensure!(worst <= 1e-12, "max deviation from the direct sum {worst:e}");
    for n in 1..=200usize {
        let s = shannon_entropy(&normalize((0..n).map(|k| (k, 7.0))).unwrap()).nats;
        ensure!((s - (n as f64).ln()).abs() <= 1e-12, "uniform over {n}: {s} vs ln n");
    }
    let took = within_budget(start, Duration::from_secs(5))?;
    Ok(format!("1000 random + 200 uniform; max deviation {worst:.1e}; {took:.2?}"))
}

fn entropy_properties() -> Outcome {
    let masses = prop::collection::vec(0.0f64..1e6, 2..120).prop_filter("mass", |v| v.iter().any(|m| *m > 0.0));
    run_cases(10_000, masses.clone(), |ms| {
        let d = normalize(ms.iter().copied().enumerate()).unwrap();
        let s = shannon_entropy(&d);
        prop_assert!(s.nats >= 0.0);
        prop_assert!(s.nats <= (s.support_size as f64).ln() + 1e-9);
        Ok(())
    })?;
    run_cases(10_000, (masses, any::<prop::sample::Index>(), any::<prop::sample::Index>()), |(ms, a, b)| {
        let (i, j) = (a.index(ms.len()), b.index(ms.len()));
        prop_assume!(i != j);
        let before = shannon_entropy(&normalize(ms.iter().copied().enumerate()).unwrap()).nats;
        let merged = ms.iter().enumerate().map(|(k, m)| (if k == j { i } else { k }, *m));
        let after = shannon_entropy(&normalize(merged).unwrap()).nats;
        prop_assert!(after <= before + 1e-12);
        Ok(())
    })?;
    Ok("bounds 10000 cases, merge monotonicity 10000 cases".into())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn fixture_scatter() -> Result<ScatterResult, String> {
    let snaps = load_fixture_dir(&fixtures().join("snapshots")).map_err(|e| e.to_string())?;
    entropy_scatter(&snaps, april(), DEFAULT_MIN_ARTICLES).map_err(|e| e.to_string())
}

fn scatter_ordinal() -> Outcome {
    let start = Instant::now();
    let r = fixture_scatter()?;
    let point = |code: &str| r.points.iter().find(|p| p.wiki == code).ok_or(format!("no point for {code}"));
    let med_edit = median(r.points.iter().map(|p| p.edit_entropy).collect());
    let med_view = median(r.points.iter().map(|p| p.view_entropy).collect());

    let ja = point("ja")?;
    ensure!(
        r.points.iter().all(|p| p.wiki == "ja" || p.view_entropy > ja.view_entropy),
        "(a) ja view entropy {} is not the strict minimum",
        ja.view_entropy
    );
    for code in ["en", "es", "ar"] {
        let p = point(code)?;
        ensure!(p.edit_entropy > med_edit && p.view_entropy > med_view, "(b) {code} not above both medians");
    }
    for code in ["ceb", "war"] {
        let p = point(code)?;
        ensure!(p.edit_entropy > med_edit && p.view_entropy < med_view, "(c) {code} not high-edit/low-view");
    }
    let arz = point("arz")?;
    ensure!(arz.view_entropy > arz.edit_entropy, "(d) arz view entropy not above edit entropy");
    let took = within_budget(start, Duration::from_secs(10))?;
    Ok(format!("{} wikis, medians edit {med_edit:.3} view {med_view:.3}; (a)-(d) hold; {took:.2?}", r.points.len()))
}

/// Slope and intercept from the 2x2 normal equations by Cramer's rule.
fn normal_equations(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det)
}

fn regression() -> Outcome {
    let mut rng = StdRng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..60);
        let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-5.0..5.0));
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let x = rng.random_range(0.0..5.0);
                (x, a * x + b + rng.random_range(-1.0..1.0))
            })
            .collect();
        let fit = linear_fit(&pts).map_err(|e| e.to_string())?;
        let (slope, intercept) = normal_equations(&pts);
        worst = worst.max((fit.slope - slope).abs()).max((fit.intercept - intercept).abs());
    }
    ensure!(worst <= 1e-9, "max deviation from normal equations {worst:e}");
    let r = fixture_scatter()?;
    ensure!(r.fit.slope > 0.0, "fixture slope {} is not positive", r.fit.slope);
    Ok(format!("100 sets, max deviation {worst:.1e}; fixture slope {:.4}", r.fit.slope))
}

/// Stamps the virtual time at which each request reaches the wire.
struct Stamping {
    clock: Arc<ManualClock>,
    inner: ReplayTransport,
    stamps: Mutex<Vec<(String, Duration)>>,
}

impl Transport for Stamping {
    fn execute(&self, r: &HttpRequest) -> Result<HttpResponse, TransportError> {
        self.stamps.lock().unwrap().push((r.host().to_string(), self.clock.now()));
        self.inner.execute(r)
    }
}

fn replay(jobs: usize) -> Result<(Vec<(String, String)>, Arc<Stamping>, Ingestor), String> {
    let recorded = fixtures().join("recorded");
    let clock = Arc::new(ManualClock::new(replay_epoch(april())));
    let inner = ReplayTransport::load(&recorded).map_err(|e| e.to_string())?;
    let transport = Arc::new(Stamping { clock: clock.clone(), inner, stamps: Mutex::new(Vec::new()) });
    let ingestor = Ingestor::new(FetchPolicy::default(), transport.clone(), clock).map_err(|e| e.to_string())?;
    let aux = AuxiliaryData::load(&fixtures()).map_err(|e| e.to_string())?;
    let wikis = recorded_wikis(&recorded).map_err(|e| e.to_string())?;
    let mut rendered = Vec::new();
    for (wiki, r) in ingestor.snapshot_cohort(&wikis, april(), &aux, jobs) {
        let snap = r.map_err(|e| format!("{wiki}: {e}"))?;
        rendered.push((fixture_file_name(&snap), to_fixture_json(&snap)));
    }
    Ok((rendered, transport, ingestor))
}

fn ingestion_replay() -> Outcome {
    let start = Instant::now();
    let (rendered, _, ingestor) = replay(4)?;
    for (name, text) in &rendered {
        let golden = std::fs::read_to_string(fixtures().join("snapshots").join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(golden == *text, "{name} differs from its golden");
    }
    let policy = FetchPolicy::default();
    let t = ingestor.client().telemetry();
    ensure!(t.max_in_flight_observed <= policy.max_in_flight, "{} requests in flight", t.max_in_flight_observed);
    ensure!(t.retries == 3 && t.rate_limited == 1, "unexpected retry telemetry {t:?}");

    // sequential run: exact spacing and backoff on the virtual clock
    let (again, stamping, _) = replay(1)?;
    ensure!(again == rendered, "sequential replay differs from concurrent replay");
    let stamps = stamping.stamps.lock().unwrap().clone();
    let mut last: BTreeMap<String, Duration> = BTreeMap::new();
    for (host, at) in &stamps {
        if let Some(prev) = last.insert(host.clone(), *at) {
            ensure!(*at - prev >= policy.min_request_interval, "{host}: requests {:?} apart", *at - prev);
        }
    }
    let sleeps = stamping.clock.sleeps();
    ensure!(sleeps.contains(&Duration::from_secs(2)), "Retry-After of 2 s not honored");
    ensure!(
        sleeps.contains(&policy.backoff(0)) && sleeps.contains(&policy.backoff(1)),
        "exponential backoff not applied"
    );
    Ok(format!(
        "{} snapshots byte-identical; {} requests spaced >= {:?} per host; wall {:.2?}",
        rendered.len(),
        stamps.len(),
        policy.min_request_interval,
        start.elapsed()
    ))
}

fn scale_distributions(s: &WikiSnapshot, lambda: f64) -> WikiSnapshot {
    let mut s = s.clone();
    for d in &mut s.distributions {
        for v in d.entries.values_mut() {
            *v *= lambda;
        }
    }
    s
}

fn engine_properties() -> Outcome {
    let start = Instant::now();
    let window: Window = "2021-02..2021-05".parse().unwrap();
    let registry = Registry::default_registry();
    let ctx = EngineContext::default();

    run_cases(10_000, (any::<u64>(), 1usize..8), |(seed, n)| {
        let a = assess(&synth::cohort(seed, n, window), &registry, &ctx).unwrap();
        for cell in a.matrix.rows.iter().flat_map(|r| r.cells.iter().flatten()) {
            prop_assert!((0.0..=1.0).contains(&cell.score));
            prop_assert!(cell.contributing.iter().all(|c| (0.0..=1.0).contains(&c.risk_percentile)));
        }
        Ok(())
    })?;

    let higher = registry.definitions().iter().find(|d| d.risk_polarity == RiskPolarity::HigherIsRiskier).unwrap();
    let lower = registry.definitions().iter().find(|d| d.risk_polarity == RiskPolarity::LowerIsRiskier).unwrap();
    run_cases(
        10_000,
        (prop::collection::vec(-1e6f64..1e6, 1..40), any::<prop::sample::Index>(), 0.0f64..1e6),
        |(cohort, i, delta)| {
            let i = i.index(cohort.len());
            let mut raised = cohort.clone();
            raised[i] += delta;
            let up = |def| {
                (risk_percentile(def, cohort[i], &cohort).unwrap(), risk_percentile(def, raised[i], &raised).unwrap())
            };
            let (b, a) = up(higher);
            prop_assert!(a >= b);
            let (b, a) = up(lower);
            prop_assert!(a <= b);
            Ok(())
        },
    )?;

    run_cases(10_000, (any::<u64>(), 2usize..7, any::<prop::sample::Index>()), |(seed, n, rot)| {
        let snaps = synth::cohort(seed, n, window);
        let mut shuffled = snaps.clone();
        shuffled.rotate_left(rot.index(n));
        shuffled.reverse();
        let a = assess(&snaps, &registry, &ctx).unwrap();
        let b = assess(&shuffled, &registry, &ctx).unwrap();
        prop_assert_eq!(&a.matrix, &b.matrix);
        prop_assert_eq!(&a.indicator_sets, &b.indicator_sets);
        let values: Vec<(WikiId, f64)> = a
            .indicator_sets
            .iter()
            .filter_map(|s| Some((s.wiki.clone(), s.get("views_by_country_entropy")?.value.scalar()?)))
            .collect();
        let mut rev = values.clone();
        rev.reverse();
        let def = registry.get("views_by_country_entropy").unwrap();
        prop_assert_eq!(rank_wikis(def, &values).unwrap(), rank_wikis(def, &rev).unwrap());
        Ok(())
    })?;

    run_cases(10_000, (any::<u64>(), 2usize..6, any::<prop::sample::Index>(), 1e-3f64..1e3), |(seed, n, w, lambda)| {
        let mut snaps = synth::cohort(seed, n, window);
        let Ok(before) = entropy_scatter(&snaps, window, 0) else { return Ok(()) };
        let w = w.index(n);
        snaps[w] = scale_distributions(&snaps[w], lambda);
        let after = entropy_scatter(&snaps, window, 0).unwrap();
        for (p, q) in before.points.iter().zip(&after.points) {
            prop_assert!((p.edit_entropy - q.edit_entropy).abs() <= 1e-12);
            prop_assert!((p.view_entropy - q.view_entropy).abs() <= 1e-12);
        }
        Ok(())
    })?;
    let took = within_budget(start, Duration::from_secs(30))?;
    Ok(format!("bounds, polarity, permutation, scale: 10000 cases each; {took:.2?}"))
}

fn tree(base: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![base.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        for e in entries {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_observatory"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    Ok(())
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let config = p("observatory.json");
    let index = fixtures().join("democracy_index.json");
    std::fs::write(&config, format!(r#"{{"democracy_index": {:?}, "store": "store"}}"#, index.to_string_lossy()))
        .map_err(|e| e.to_string())?;
    let snapshots = fixtures().join("snapshots").to_string_lossy().into_owned();
    let pipeline = || -> Result<(), String> {
        cli(&["--config", &config, "ingest", "--window", "2021-04", "--fixtures", &snapshots])?;
        cli(&["--config", &config, "compute", "--window", "2021-04"])
    };
    pipeline()?;
    cli(&["--config", &config, "scatter", "--window", "2021-04", "--out", &p("out")])?;
    cli(&["--config", &config, "export", "--window", "2021-04", "--out", &p("out/export")])?;
    let produced = tree(Path::new(&p("out")));
    let golden = tree(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden"));
    ensure!(produced.keys().eq(golden.keys()), "exported file set differs from goldens");
    for (rel, bytes) in &produced {
        ensure!(golden[rel] == *bytes, "{rel} differs from its golden");
    }
    let before = tree(Path::new(&p("store")));
    pipeline()?;
    ensure!(tree(Path::new(&p("store"))) == before, "rerun changed the store");
    Ok(format!("{} exported files byte-identical; rerun left {} store files unchanged", produced.len(), before.len()))
}

fn crash_consistency() -> Outcome {
    let snaps = load_fixture_dir(&fixtures().join("snapshots")).map_err(|e| e.to_string())?;
    let assessment = assess(&snaps, &Registry::default_registry(), &EngineContext::default()).map_err(|e| e.to_string())?;
    let scatter = entropy_scatter(&snaps, april(), DEFAULT_MIN_ARTICLES).map_err(|e| e.to_string())?;
    let set = assessment.indicator_sets[0].clone();
    let docs: Vec<(StoreKey, Document)> = vec![
        (StoreKey::for_snapshot(&snaps[1]), Document::Snapshot(snaps[1].clone())),
        (StoreKey::indicators(&set.wiki, set.window, 1), Document::Indicators(set)),
        (StoreKey::matrix(assessment.matrix.window, 1), Document::Matrix(assessment.matrix.clone())),
        (StoreKey::scatter(april(), DEFAULT_MIN_ARTICLES, 1), Document::Scatter(scatter)),
    ];
    let prior = (StoreKey::for_snapshot(&snaps[0]), Document::Snapshot(snaps[0].clone()));
    // canonical bytes of each document, from an uninterrupted put
    let reference = tempfile::tempdir().map_err(|e| e.to_string())?;
    let reference = Store::open(reference.path()).map_err(|e| e.to_string())?;
    let mut trials = 0;
    for (key, doc) in &docs {
        reference.put(key, doc).map_err(|e| e.to_string())?;
        let expected = reference.get_bytes(key).map_err(|e| e.to_string())?;
        for point in FaultPoint::ALL {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
            store.put(&prior.0, &prior.1).map_err(|e| e.to_string())?;
            store.inject_fault(Some(point));
            ensure!(store.put(key, doc).is_err(), "{point:?} did not interrupt the put");
            drop(store);
            // a fresh handle sees what a restarted process would
            let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
            store.get(key).map_err(|e| format!("{key} at {point:?}: {e}"))?;
            match store.get_bytes(key).map_err(|e| format!("{key} at {point:?}: {e}"))? {
                None => ensure!(point != FaultPoint::DocumentCommitted, "committed document lost"),
                Some(bytes) => ensure!(Some(&bytes) == expected.as_ref(), "{key} at {point:?}: partial or altered document"),
            }
            ensure!(store.get(&prior.0).ok().flatten().as_ref() == Some(&prior.1), "prior state damaged at {point:?}");
            store.put(key, doc).map_err(|e| format!("retry after {point:?}: {e}"))?;
            ensure!(store.get_bytes(key).ok().flatten() == expected, "{key} at {point:?}: retry did not store the document");
            trials += 1;
        }
    }
    Ok(format!("{trials} interrupted puts across {} fault points and 4 document kinds", FaultPoint::ALL.len()))
}

async fn api_get(app: &axum::Router, uri: &str) -> Result<(StatusCode, String), String> {
    let req = Request::builder().uri(uri).body(Body::empty()).map_err(|e| e.to_string())?;
    let resp = app.clone().oneshot(req).await.map_err(|e| e.to_string())?;
    let status = resp.status();
    ensure!(resp.headers().contains_key("x-api-version"), "{uri}: no version header");
    let bytes = resp.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();
    let body = String::from_utf8(bytes.to_vec()).map_err(|e| e.to_string())?;
    let v: serde_json::Value = serde_json::from_str(&body).map_err(|e| format!("{uri}: {e}"))?;
    ensure!(to_canonical_string(&v).map_err(|e| e.to_string())? == body, "{uri}: body is not canonical");
    Ok((status, body))
}

fn api_contract() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    {
        let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
        for s in load_fixture_dir(&fixtures().join("snapshots")).map_err(|e| e.to_string())? {
            store.put(&StoreKey::for_snapshot(&s), &Document::Snapshot(s)).map_err(|e| e.to_string())?;
        }
        observatory_core::pipeline::compute_window(
            &store,
            april(),
            &Registry::default_registry(),
            &EngineContext::default(),
            DEFAULT_MIN_ARTICLES,
        )
        .map_err(|e| e.to_string())?;
    }
    let before = tree(dir.path());
    let state = Arc::new(AppState {
        store: Store::open_read_only(dir.path()).map_err(|e| e.to_string())?,
        registry: Registry::default_registry(),
    });
    let app = router(state.clone(), None).map_err(|e| e.to_string())?;
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().map_err(|e| e.to_string())?;
    let checked = rt.block_on(async {
        let mut checked = 0;
        let ok = |s: StatusCode, uri: &str| if s == StatusCode::OK { Ok(()) } else { Err(format!("{uri}: {s}")) };

        let (s, b) = api_get(&app, "/api/v1/taxonomy").await?;
        ok(s, "taxonomy")?;
        let v: serde_json::Value = serde_json::from_str(&b).unwrap();
        let cats: Vec<CategoryInfo> = serde_json::from_value(v["categories"].clone()).map_err(|e| e.to_string())?;
        ensure!(cats.len() == 8, "taxonomy has {} leaves", cats.len());
        let (s, _) = api_get(&app, "/api/v1/health").await?;
        ok(s, "health")?;
        let (s, b) = api_get(&app, "/api/v1/wikis").await?;
        ok(s, "wikis")?;
        let v: serde_json::Value = serde_json::from_str(&b).unwrap();
        let codes: Vec<String> =
            v["items"].as_array().unwrap().iter().map(|i| i["code"].as_str().unwrap().to_string()).collect();
        checked += 3;
        for code in &codes {
            let uri = format!("/api/v1/wikis/{code}/indicators?window=2021-04");
            let (s, b) = api_get(&app, &uri).await?;
            ok(s, &uri)?;
            serde_json::from_str::<IndicatorSet>(&b).map_err(|e| format!("{uri}: {e}"))?;
            let uri = format!("/api/v1/wikis/{code}/series/articles");
            let (s, _) = api_get(&app, &uri).await?;
            ok(s, &uri)?;
            checked += 2;
        }
        let (s, b) = api_get(&app, "/api/v1/matrix?window=2021-04").await?;
        ok(s, "matrix")?;
        let m: RiskMatrix = serde_json::from_str(&b).map_err(|e| e.to_string())?;
        ensure!(m.rows.len() == codes.len() && m.rows.iter().all(|r| r.cells.len() == 8), "matrix shape");
        for def in Registry::default_registry().definitions().iter().filter(|d| d.is_scorable()) {
            let uri = format!("/api/v1/rankings/{}?window=2021-04", def.id);
            let (s, _) = api_get(&app, &uri).await?;
            ensure!(s == StatusCode::OK || s == StatusCode::NOT_FOUND, "{uri}: {s}");
            checked += 1;
        }
        let (s, b) = api_get(&app, "/api/v1/scatter?window=2021-04").await?;
        ok(s, "scatter")?;
        let r: ScatterResult = serde_json::from_str(&b).map_err(|e| e.to_string())?;
        ensure!(r.points.len() == 25, "scatter has {} points", r.points.len());
        let (_, again) = api_get(&app, "/api/v1/scatter?window=2021-04").await?;
        ensure!(again == b, "scatter body not deterministic");
        let (s, b) = api_get(&app, "/api/v1/wikis/zz/indicators").await?;
        ensure!(s == StatusCode::NOT_FOUND && b.contains("unknown_wiki"), "unknown wiki gave {s}");
        let (s, _) = api_get(&app, "/api/v1/scatter?min_articles=1000000000000").await?;
        ensure!(s == StatusCode::CONFLICT, "insufficient data gave {s}");
        let (s, _) = api_get(&app, "/api/v1/scatter?min_articles=0").await?;
        ensure!(s == StatusCode::UNPROCESSABLE_ENTITY, "min_articles=0 gave {s}");
        Ok::<usize, String>(checked + 6)
    })?;
    ensure!(state.store.write_count() == 0, "{} store writes", state.store.write_count());
    ensure!(tree(dir.path()) == before, "store tree changed during the sweep");
    Ok(format!("{checked} requests schema-checked; 0 store writes"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("entropy oracle equivalence", entropy_oracle),
        ("entropy bounds and merge monotonicity", entropy_properties),
        ("scatter ordinal reproduction", scatter_ordinal),
        ("regression vs normal equations", regression),
        ("ingestion replay and fetch policy", ingestion_replay),
        ("risk-engine invariants", engine_properties),
        ("end-to-end golden run", end_to_end),
        ("storage crash consistency", crash_consistency),
        ("API contract", api_contract),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
