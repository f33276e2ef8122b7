use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context as _, Result};
use observatory_api::{ServeConfig, Server};
use observatory_core::canonical::{self, format_real};
use observatory_core::engine::{entropy_scatter, DemocracyIndex, EngineContext, EngineError, ScatterResult};
use observatory_core::ingestion::fixture::load_fixture_dir;
use observatory_core::ingestion::{
    recorded_wikis, replay_epoch, AuxiliaryData, Clock, IngestError, Ingestor, ManualClock, RecordingTransport,
    ReplayTransport, ReqwestTransport, SystemClock, Transport,
};
use observatory_core::pipeline::{compute_window, PipelineError};
use observatory_core::storage::{Document, Store, StoreError, StoreKey, StoreKind};
use observatory_core::{Registry, WikiId, WikiSnapshot, Window};
use serde::Serialize;

use crate::config::Config;
use crate::UsageError;

/// Settings every command sees after merging file, environment and flags.
pub struct Context {
    pub config: Config,
    pub store: Option<PathBuf>,
}

impl Context {
    fn store_root(&self) -> Result<&Path> {
        self.store
            .as_deref()
            .or(self.config.store.as_deref())
            .ok_or_else(|| UsageError("no store configured; pass --store or set `store` in the config".into()).into())
    }

    fn open_store(&self) -> Result<Store> {
        let root = self.store_root()?;
        Store::open(root).with_context(|| format!("opening store {}", root.display()))
    }

    fn open_store_read_only(&self) -> Result<Store> {
        let root = self.store_root()?;
        Store::open_read_only(root).with_context(|| format!("opening store {}", root.display()))
    }

    fn registry(&self) -> Result<Registry> {
        Registry::default_registry()
            .without(&self.config.disabled_indicators)
            .map_err(|e| UsageError(format!("disabled_indicators: {e}")).into())
    }

    fn engine_context(&self) -> Result<EngineContext> {
        let democracy_index = match &self.config.democracy_index {
            Some(p) => Some(DemocracyIndex::load(p).with_context(|| format!("loading democracy index {}", p.display()))?),
            None => None,
        };
        Ok(EngineContext { democracy_index, log_base: self.config.entropy_base })
    }

    fn aux(&self, flag: Option<&Path>) -> Result<AuxiliaryData> {
        match flag.or(self.config.aux_dir.as_deref()) {
            Some(dir) => AuxiliaryData::load(dir).with_context(|| format!("loading auxiliary data from {}", dir.display())),
            None => Ok(AuxiliaryData::default()),
        }
    }

    /// `--wikis` if given, else the configured cohort; `None` means "all
    /// available" for the offline sources.
    fn cohort(&self, flag: &[String]) -> Result<Option<Vec<WikiId>>> {
        let names = if flag.is_empty() { &self.config.wikis } else { flag };
        if names.is_empty() {
            return Ok(None);
        }
        names
            .iter()
            .map(|n| n.parse::<WikiId>().map_err(|e| UsageError(format!("wiki `{n}`: {e}")).into()))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

pub enum Source {
    Fixtures(PathBuf),
    Replay { dir: PathBuf, aux: Option<PathBuf> },
    Live { aux: Option<PathBuf>, record: Option<PathBuf> },
}

enum Outcome {
    Stored(StoreKey),
    Unchanged(StoreKey),
    Failed(String),
}

fn print_table(rows: &[(WikiId, Outcome)]) -> usize {
    let mut failures = 0;
    let mut out = String::new();
    for (wiki, outcome) in rows {
        let (status, detail) = match outcome {
            Outcome::Stored(k) => ("stored", k.to_string()),
            Outcome::Unchanged(k) => ("unchanged", k.to_string()),
            Outcome::Failed(e) => {
                failures += 1;
                ("FAILED", e.clone())
            }
        };
        let _ = writeln!(out, "{:<24} {:<10} {detail}", wiki.to_string(), status);
    }
    print!("{out}");
    failures
}

fn store_snapshot(store: &Store, snap: WikiSnapshot) -> Outcome {
    for w in &snap.warnings {
        log::warn!("{}: {w}", snap.id());
    }
    let key = StoreKey::for_snapshot(&snap);
    match store.put(&key, &Document::Snapshot(snap)) {
        Ok(r) if r.written => Outcome::Stored(key),
        Ok(_) => Outcome::Unchanged(key),
        Err(e @ StoreError::Conflict { .. }) => {
            Outcome::Failed(format!("{e}; snapshots are immutable per wiki and window"))
        }
        Err(e) => Outcome::Failed(e.to_string()),
    }
}

pub fn ingest(ctx: &Context, window: Window, wikis: &[String], jobs: Option<usize>, source: Source) -> Result<()> {
    let cohort = ctx.cohort(wikis)?;
    let jobs = jobs.unwrap_or(ctx.config.jobs).max(1);
    let store = ctx.open_store()?;
    let mut rows: Vec<(WikiId, Outcome)> = Vec::new();
    match source {
        Source::Fixtures(dir) => {
            let available: Vec<WikiSnapshot> = load_fixture_dir(&dir)
                .with_context(|| format!("reading fixtures from {}", dir.display()))?
                .into_iter()
                .filter(|s| s.window == window)
                .collect();
            let wanted = cohort.unwrap_or_else(|| available.iter().map(|s| s.id()).collect());
            let mut wanted: Vec<WikiId> = wanted;
            wanted.sort();
            wanted.dedup();
            for wiki in wanted {
                let outcome = match available.iter().find(|s| s.id() == wiki) {
                    Some(s) => store_snapshot(&store, s.clone()),
                    None => Outcome::Failed(format!("no fixture snapshot for {window}")),
                };
                rows.push((wiki, outcome));
            }
        }
        Source::Replay { dir, aux } => {
            let transport = Arc::new(
                ReplayTransport::load(&dir).with_context(|| format!("loading recorded payloads from {}", dir.display()))?,
            );
            let clock = Arc::new(ManualClock::new(replay_epoch(window)));
            let wanted = match cohort {
                Some(c) => c,
                None => recorded_wikis(&dir)?,
            };
            rows = run_ingestor(ctx, transport, clock, &store, window, &wanted, &ctx.aux(aux.as_deref())?, jobs)?;
        }
        Source::Live { aux, record } => {
            let Some(wanted) = cohort else {
                bail!(UsageError("live ingestion needs a cohort; pass --wikis or set `wikis` in the config".into()));
            };
            let policy = ctx.config.fetch.policy();
            let http = ReqwestTransport::new(&policy.user_agent, policy.timeout)?;
            let transport: Arc<dyn Transport> = match record {
                Some(dir) => Arc::new(RecordingTransport::new(http, dir)),
                None => Arc::new(http),
            };
            let aux = ctx.aux(aux.as_deref())?;
            rows = run_ingestor(ctx, transport, Arc::new(SystemClock::new()), &store, window, &wanted, &aux, jobs)?;
        }
    }
    let failures = print_table(&rows);
    let stored = rows.iter().filter(|(_, o)| matches!(o, Outcome::Stored(_))).count();
    println!("{} snapshot(s) for {window}: {stored} new, {failures} failed", rows.len());
    if failures > 0 {
        bail!("{failures} wiki(s) could not be ingested");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_ingestor(
    ctx: &Context,
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    store: &Store,
    window: Window,
    wikis: &[WikiId],
    aux: &AuxiliaryData,
    jobs: usize,
) -> Result<Vec<(WikiId, Outcome)>> {
    let ingestor = Ingestor::new(ctx.config.fetch.policy(), transport, clock)
        .map_err(|e| UsageError(format!("fetch policy: {e}")))?;
    let rows = ingestor
        .snapshot_cohort(wikis, window, aux, jobs)
        .into_iter()
        .map(|(wiki, r)| {
            let outcome = match r {
                Ok(snap) => store_snapshot(store, snap),
                Err(IngestError::HardFailure { source, .. }) => Outcome::Failed(source.to_string()),
                Err(e) => Outcome::Failed(e.to_string()),
            };
            (wiki, outcome)
        })
        .collect();
    let t = ingestor.client().telemetry();
    log::info!("{} request(s), {} retried, {} rate limited", t.requests, t.retries, t.rate_limited);
    Ok(rows)
}

pub fn compute(ctx: &Context, window: Window, min_articles: Option<u64>) -> Result<()> {
    let registry = ctx.registry()?;
    let engine = ctx.engine_context()?;
    let store = ctx.open_store()?;
    let min_articles = min_articles.unwrap_or(ctx.config.min_articles);
    let report = match compute_window(&store, window, &registry, &engine, min_articles) {
        Ok(r) => r,
        Err(PipelineError::Store(e @ StoreError::Conflict { .. })) => {
            bail!("{e}; results for this method version were computed from different inputs or settings")
        }
        Err(e) => return Err(e.into()),
    };
    if let Err(e) = &report.scatter {
        log::warn!("no scatter stored for {window}: {e}");
    }
    println!(
        "computed {window} for {} wiki(s): {} document(s) written, {} unchanged",
        report.wikis,
        report.written(),
        report.receipts.len() - report.written()
    );
    Ok(())
}

#[derive(Serialize)]
struct FitFile<'a> {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    n_points: usize,
    method_version: u32,
    parameters: &'a observatory_core::engine::ScatterParameters,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn scatter_csv(result: &ScatterResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["wiki", "edit_entropy", "view_entropy"])?;
    for p in &result.points {
        w.write_record([p.wiki.clone(), format_real(p.edit_entropy)?, format_real(p.view_entropy)?])?;
    }
    Ok(w.into_inner().map_err(|e| anyhow!("{e}"))?)
}

pub fn scatter(ctx: &Context, window: Window, min_articles: Option<u64>, out: &Path) -> Result<()> {
    let min_articles = min_articles.unwrap_or(ctx.config.min_articles);
    if min_articles == 0 {
        bail!(UsageError("--min-articles must be positive".into()));
    }
    let store = ctx.open_store_read_only()?;
    let snapshots = store.snapshots(window)?;
    if snapshots.is_empty() {
        bail!("no snapshots stored for {window}");
    }
    let result = match entropy_scatter(&snapshots, window, min_articles) {
        Ok(r) => r,
        Err(EngineError::InsufficientData { qualifying }) => {
            bail!("insufficient data: {qualifying} qualifying wiki(s) above {min_articles} articles, need at least 2")
        }
        Err(e) => return Err(e.into()),
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join("scatter.csv"), &scatter_csv(&result)?)?;
    let fit = FitFile {
        slope: result.fit.slope,
        intercept: result.fit.intercept,
        r_squared: result.fit.r_squared,
        n_points: result.fit.n_points,
        method_version: result.method_version,
        parameters: &result.parameters,
    };
    write_file(&out.join("fit.json"), &canonical::to_canonical_vec(&fit)?)?;
    println!(
        "{} point(s); slope {} intercept {} r2 {}; written to {}",
        result.points.len(),
        format_real(result.fit.slope)?,
        format_real(result.fit.intercept)?,
        format_real(result.fit.r_squared)?,
        out.display()
    );
    Ok(())
}

/// Copies every derived document stored for `window` to `out`, as stored.
pub fn export(ctx: &Context, window: Window, out: &Path) -> Result<()> {
    let store = ctx.open_store_read_only()?;
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    for kind in [StoreKind::Indicators, StoreKind::Matrix, StoreKind::Scatter] {
        for key in store.latest_keys(kind, Some(window))? {
            let Some(bytes) = store.get_bytes(&key)? else { continue };
            let name = match kind {
                StoreKind::Matrix => PathBuf::from("matrix.json"),
                _ => PathBuf::from(kind.as_str()).join(format!("{}.json", key.subject)),
            };
            files.push((name, bytes));
        }
    }
    if files.is_empty() {
        bail!("nothing computed for {window}; run `compute` first");
    }
    for (name, bytes) in &files {
        let path = out.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        write_file(&path, bytes)?;
    }
    println!("exported {} document(s) for {window} to {}", files.len(), out.display());
    Ok(())
}

pub fn serve(ctx: &Context, listen: Option<String>, cors_origin: Option<String>) -> Result<()> {
    let addr_text = listen.unwrap_or_else(|| ctx.config.listen.clone());
    let addr = addr_text.parse().map_err(|_| UsageError(format!("invalid listen address `{addr_text}`")))?;
    let config = ServeConfig {
        addr,
        store_root: ctx.store_root()?.to_path_buf(),
        cors_origin: cors_origin.or_else(|| ctx.config.cors_origin.clone()),
        registry: ctx.registry()?,
    };
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let server = Server::bind(config).await?;
        println!("listening on http://{}", server.local_addr()?);
        use std::io::Write;
        std::io::stdout().flush()?;
        server.run(observatory_api::shutdown_signal()).await?;
        println!("stopped");
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use observatory_core::engine::{ScatterParameters, ScatterPoint};
    use observatory_core::metrics::linear_fit;

    #[test]
    fn csv_uses_canonical_reals() {
        let points = vec![
            ScatterPoint { wiki: "ja".into(), edit_entropy: 1.0 / 3.0, view_entropy: 0.2, articles: 1 },
            ScatterPoint { wiki: "en".into(), edit_entropy: 2.0, view_entropy: 2.5, articles: 1 },
        ];
        let fit = linear_fit(&[(1.0 / 3.0, 0.2), (2.0, 2.5)]).unwrap();
        let r = ScatterResult {
            method_version: 1,
            parameters: ScatterParameters { min_articles: 1, window: "2021-04".parse().unwrap() },
            points,
            fit,
        };
        let text = String::from_utf8(scatter_csv(&r).unwrap()).unwrap();
        assert_eq!(text, "wiki,edit_entropy,view_entropy\nja,0.333333333333,0.2\nen,2.0,2.5\n");
    }
}
