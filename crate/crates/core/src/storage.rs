//! Directory-tree document store.
//!
//! Layout: `{root}/{kind}/{subject}/{window}/{method_version}.json`, each
//! document beside a `.sha256` sidecar holding the hex digest of its bytes.
//! Documents are canonical JSON and immutable per key.
//!
//! A put writes the sidecar first and the document last, each through a
//! temporary file and a rename. The document rename is the commit point: a
//! sidecar without a document reads as absent, and a reader never sees a
//! partially written document.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::canonical;
use crate::engine::{IndicatorSet, RiskMatrix, ScatterResult};
use crate::model::{Month, Value, WikiId, WikiSnapshot, Window};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("conflict: {key} already holds different content")]
    Conflict { key: String },
    #[error("schema violation for {key}: {message}")]
    SchemaViolation { key: String, message: String },
    #[error("integrity check failed for {key}: {message}")]
    Integrity { key: String, message: String },
    #[error("invalid store key `{0}`")]
    InvalidKey(String),
    #[error("store at {} is unavailable: {message}", path.display())]
    Unavailable { path: PathBuf, message: String },
    #[error("store is open read-only")]
    ReadOnly,
    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("injected fault at {0:?}")]
    InjectedFault(FaultPoint),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoreKind {
    Snapshot,
    Indicators,
    Matrix,
    Scatter,
}

impl StoreKind {
    pub const ALL: [StoreKind; 4] = [StoreKind::Snapshot, StoreKind::Indicators, StoreKind::Matrix, StoreKind::Scatter];

    pub fn as_str(self) -> &'static str {
        match self {
            StoreKind::Snapshot => "snapshot",
            StoreKind::Indicators => "indicators",
            StoreKind::Matrix => "matrix",
            StoreKind::Scatter => "scatter",
        }
    }
}

impl FromStr for StoreKind {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StoreKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| StoreError::InvalidKey(s.to_string()))
    }
}

/// Cohort id for the matrix over every stored wiki.
pub const COHORT_ALL: &str = "all";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StoreKey {
    pub kind: StoreKind,
    /// Wiki id (`ja.wikipedia`) or cohort id.
    pub subject: String,
    pub window: Window,
    pub method_version: u32,
}

fn valid_subject(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with('.')
        && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '.' | '-' | '_'))
}

impl StoreKey {
    pub fn new(kind: StoreKind, subject: impl Into<String>, window: Window, method_version: u32) -> Result<Self, StoreError> {
        let subject = subject.into();
        if !valid_subject(&subject) {
            return Err(StoreError::InvalidKey(subject));
        }
        Ok(StoreKey { kind, subject, window, method_version })
    }

    pub fn for_snapshot(s: &WikiSnapshot) -> Self {
        StoreKey { kind: StoreKind::Snapshot, subject: s.id().to_string(), window: s.window, method_version: s.schema_version }
    }

    pub fn indicators(wiki: &WikiId, window: Window, method_version: u32) -> Self {
        StoreKey { kind: StoreKind::Indicators, subject: wiki.to_string(), window, method_version }
    }

    pub fn matrix(window: Window, method_version: u32) -> Self {
        StoreKey { kind: StoreKind::Matrix, subject: COHORT_ALL.into(), window, method_version }
    }

    /// Scatter documents are keyed by their article threshold.
    pub fn scatter(window: Window, min_articles: u64, method_version: u32) -> Self {
        StoreKey { kind: StoreKind::Scatter, subject: scatter_cohort(min_articles), window, method_version }
    }

    fn relative_path(&self) -> PathBuf {
        PathBuf::from(self.kind.as_str())
            .join(&self.subject)
            .join(self.window.to_string())
            .join(format!("{}.json", self.method_version))
    }
}

pub fn scatter_cohort(min_articles: u64) -> String {
    format!("articles-gt-{min_articles}")
}

impl fmt::Display for StoreKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}/{}", self.kind.as_str(), self.subject, self.window, self.method_version)
    }
}

impl FromStr for StoreKey {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StoreError::InvalidKey(s.to_string());
        let parts: Vec<&str> = s.split('/').collect();
        let [kind, subject, window, mv] = parts[..] else { return Err(bad()) };
        let window: Window = window.parse().map_err(|_| bad())?;
        let mv: u32 = mv.parse().map_err(|_| bad())?;
        if mv.to_string() != parts[3] {
            return Err(bad());
        }
        StoreKey::new(kind.parse()?, subject, window, mv)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Snapshot(WikiSnapshot),
    Indicators(IndicatorSet),
    Matrix(RiskMatrix),
    Scatter(ScatterResult),
}

impl Document {
    pub fn kind(&self) -> StoreKind {
        match self {
            Document::Snapshot(_) => StoreKind::Snapshot,
            Document::Indicators(_) => StoreKind::Indicators,
            Document::Matrix(_) => StoreKind::Matrix,
            Document::Scatter(_) => StoreKind::Scatter,
        }
    }

    fn encode(&self) -> Result<Vec<u8>, canonical::CanonicalError> {
        match self {
            Document::Snapshot(d) => canonical::to_canonical_vec(d),
            Document::Indicators(d) => canonical::to_canonical_vec(d),
            Document::Matrix(d) => canonical::to_canonical_vec(d),
            Document::Scatter(d) => canonical::to_canonical_vec(d),
        }
    }

    fn decode(kind: StoreKind, bytes: &[u8]) -> Result<Self, serde_json::Error> {
        Ok(match kind {
            StoreKind::Snapshot => Document::Snapshot(canonical::from_slice(bytes)?),
            StoreKind::Indicators => Document::Indicators(canonical::from_slice(bytes)?),
            StoreKind::Matrix => Document::Matrix(canonical::from_slice(bytes)?),
            StoreKind::Scatter => Document::Scatter(canonical::from_slice(bytes)?),
        })
    }

    /// Checks that the document belongs under `key`.
    fn check_key(&self, key: &StoreKey) -> Result<(), String> {
        if self.kind() != key.kind {
            return Err(format!("a {} document cannot be stored under a {} key", self.kind().as_str(), key.kind.as_str()));
        }
        let (subject, window) = match self {
            Document::Snapshot(s) => {
                s.validate().map_err(|e| e.to_string())?;
                if s.schema_version != key.method_version {
                    return Err(format!("schema version {} under key version {}", s.schema_version, key.method_version));
                }
                (Some(s.id().to_string()), s.window)
            }
            Document::Indicators(s) => (Some(s.wiki.to_string()), s.window),
            Document::Matrix(m) => (None, m.window),
            Document::Scatter(r) => {
                if key.subject != scatter_cohort(r.parameters.min_articles) {
                    return Err(format!("threshold {} does not match cohort {}", r.parameters.min_articles, key.subject));
                }
                (None, r.parameters.window)
            }
        };
        if let Some(subject) = subject {
            if subject != key.subject {
                return Err(format!("document is for {subject}"));
            }
        }
        if window != key.window {
            return Err(format!("document window {window} differs from key window {}", key.window));
        }
        Ok(())
    }
}

/// Proof of a stored document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub key: String,
    pub sha256: String,
    pub bytes: usize,
    /// False when an identical document was already stored.
    pub written: bool,
}

/// Places in the write protocol where a test can simulate a crash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultPoint {
    BeforeWrite,
    SidecarTempWritten,
    SidecarCommitted,
    DocumentTempPartial,
    DocumentTempWritten,
    DocumentCommitted,
}

impl FaultPoint {
    pub const ALL: [FaultPoint; 6] = [
        FaultPoint::BeforeWrite,
        FaultPoint::SidecarTempWritten,
        FaultPoint::SidecarCommitted,
        FaultPoint::DocumentTempPartial,
        FaultPoint::DocumentTempWritten,
        FaultPoint::DocumentCommitted,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub window: Window,
    pub value: Value,
}

pub struct Store {
    root: PathBuf,
    read_only: bool,
    writes: AtomicU64,
    fault: Mutex<Option<FaultPoint>>,
    key_locks: Mutex<HashMap<StoreKey, Arc<Mutex<()>>>>,
}

impl fmt::Debug for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Store").field("root", &self.root).field("read_only", &self.read_only).finish()
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn sidecar_path(doc: &Path) -> PathBuf {
    doc.with_extension("json.sha256")
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().expect("store paths have file names").to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

impl Store {
    /// Opens (creating if needed) a writable store.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)
            .map_err(|e| StoreError::Unavailable { path: root.clone(), message: e.to_string() })?;
        Ok(Self::with_mode(root, false))
    }

    /// Opens an existing store for reading; every put is refused.
    pub fn open_read_only(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        match fs::metadata(&root) {
            Ok(m) if m.is_dir() => Ok(Self::with_mode(root, true)),
            Ok(_) => Err(StoreError::Unavailable { path: root, message: "not a directory".into() }),
            Err(e) => Err(StoreError::Unavailable { path: root, message: e.to_string() }),
        }
    }

    fn with_mode(root: PathBuf, read_only: bool) -> Self {
        Store {
            root,
            read_only,
            writes: AtomicU64::new(0),
            fault: Mutex::new(None),
            key_locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn is_read_only(&self) -> bool {
        self.read_only
    }

    /// Number of documents this handle has committed.
    pub fn write_count(&self) -> u64 {
        self.writes.load(Ordering::SeqCst)
    }

    /// Arms a simulated crash for the next put that reaches `point`.
    pub fn inject_fault(&self, point: Option<FaultPoint>) {
        *self.fault.lock().unwrap() = point;
    }

    fn check_fault(&self, point: FaultPoint) -> Result<(), StoreError> {
        let mut f = self.fault.lock().unwrap();
        if *f == Some(point) {
            *f = None;
            return Err(StoreError::InjectedFault(point));
        }
        Ok(())
    }

    fn path_of(&self, key: &StoreKey) -> PathBuf {
        self.root.join(key.relative_path())
    }

    fn lock_key(&self, key: &StoreKey) -> Arc<Mutex<()>> {
        self.key_locks.lock().unwrap().entry(key.clone()).or_default().clone()
    }

    pub fn put(&self, key: &StoreKey, document: &Document) -> Result<Receipt, StoreError> {
        if self.read_only {
            return Err(StoreError::ReadOnly);
        }
        document
            .check_key(key)
            .map_err(|message| StoreError::SchemaViolation { key: key.to_string(), message })?;
        let bytes = document
            .encode()
            .map_err(|e| StoreError::SchemaViolation { key: key.to_string(), message: e.to_string() })?;
        let digest = sha256_hex(&bytes);
        let receipt = |written| Receipt { key: key.to_string(), sha256: digest.clone(), bytes: bytes.len(), written };

        let lock = self.lock_key(key);
        let _guard = lock.lock().unwrap();
        let path = self.path_of(key);
        match fs::read(&path) {
            Ok(existing) if existing == bytes => {
                // still verify that the stored copy is intact
                self.verify(key, &path, &existing)?;
                return Ok(receipt(false));
            }
            Ok(_) => return Err(StoreError::Conflict { key: key.to_string() }),
            Err(e) if e.kind() == ErrorKind::NotFound => {}
            Err(e) => return Err(io_err(&path)(e)),
        }

        self.check_fault(FaultPoint::BeforeWrite)?;
        let dir = path.parent().expect("documents live in a directory");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let sidecar = sidecar_path(&path);
        let sidecar_tmp = temp_path(&sidecar);
        write_synced(&sidecar_tmp, format!("{digest}\n").as_bytes())?;
        self.check_fault(FaultPoint::SidecarTempWritten)?;
        fs::rename(&sidecar_tmp, &sidecar).map_err(io_err(&sidecar))?;
        self.check_fault(FaultPoint::SidecarCommitted)?;

        let doc_tmp = temp_path(&path);
        if self.check_fault(FaultPoint::DocumentTempPartial).is_err() {
            write_synced(&doc_tmp, &bytes[..bytes.len() / 2])?;
            return Err(StoreError::InjectedFault(FaultPoint::DocumentTempPartial));
        }
        write_synced(&doc_tmp, &bytes)?;
        self.check_fault(FaultPoint::DocumentTempWritten)?;
        fs::rename(&doc_tmp, &path).map_err(io_err(&path))?;
        if let Ok(d) = File::open(dir) {
            // directory fsync is best effort; not every platform supports it
            let _ = d.sync_all();
        }
        self.writes.fetch_add(1, Ordering::SeqCst);
        self.check_fault(FaultPoint::DocumentCommitted)?;
        Ok(receipt(true))
    }

    fn verify(&self, key: &StoreKey, path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        let sidecar = sidecar_path(path);
        let expected = match fs::read_to_string(&sidecar) {
            Ok(s) => s.trim().to_string(),
            Err(e) if e.kind() == ErrorKind::NotFound => {
                return Err(StoreError::Integrity { key: key.to_string(), message: "checksum sidecar missing".into() })
            }
            Err(e) => return Err(io_err(&sidecar)(e)),
        };
        let actual = sha256_hex(bytes);
        if actual != expected {
            return Err(StoreError::Integrity {
                key: key.to_string(),
                message: format!("sha256 {actual} does not match recorded {expected}"),
            });
        }
        Ok(())
    }

    /// Raw canonical bytes of a document, checksum-verified.
    pub fn get_bytes(&self, key: &StoreKey) -> Result<Option<Vec<u8>>, StoreError> {
        let path = self.path_of(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&path)(e)),
        };
        self.verify(key, &path, &bytes)?;
        Ok(Some(bytes))
    }

    pub fn get(&self, key: &StoreKey) -> Result<Option<Document>, StoreError> {
        let Some(bytes) = self.get_bytes(key)? else { return Ok(None) };
        Document::decode(key.kind, &bytes)
            .map(Some)
            .map_err(|e| StoreError::Integrity { key: key.to_string(), message: format!("undecodable document: {e}") })
    }

    pub fn get_snapshot(&self, key: &StoreKey) -> Result<Option<WikiSnapshot>, StoreError> {
        match self.get(key)? {
            Some(Document::Snapshot(s)) => Ok(Some(s)),
            _ => Ok(None),
        }
    }

    pub fn get_indicators(&self, key: &StoreKey) -> Result<Option<IndicatorSet>, StoreError> {
        match self.get(key)? {
            Some(Document::Indicators(s)) => Ok(Some(s)),
            _ => Ok(None),
        }
    }

    /// Every committed key of `kind`, sorted.
    pub fn keys(&self, kind: StoreKind) -> Result<Vec<StoreKey>, StoreError> {
        let base = self.root.join(kind.as_str());
        let mut out = Vec::new();
        for subject in read_dir_names(&base)? {
            let sdir = base.join(&subject);
            for window in read_dir_names(&sdir)? {
                let wdir = sdir.join(&window);
                for file in read_dir_names(&wdir)? {
                    let Some(mv) = file.strip_suffix(".json") else { continue };
                    if let Ok(key) = format!("{}/{subject}/{window}/{mv}", kind.as_str()).parse::<StoreKey>() {
                        out.push(key);
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Keys of `kind` for `window`, keeping only the highest method version
    /// per subject.
    pub fn latest_keys(&self, kind: StoreKind, window: Option<Window>) -> Result<Vec<StoreKey>, StoreError> {
        let mut best: BTreeMap<(String, Window), StoreKey> = BTreeMap::new();
        for k in self.keys(kind)? {
            if window.is_some_and(|w| w != k.window) {
                continue;
            }
            let slot = best.entry((k.subject.clone(), k.window)).or_insert_with(|| k.clone());
            if k.method_version > slot.method_version {
                *slot = k;
            }
        }
        Ok(best.into_values().collect())
    }

    /// Wikis with at least one stored snapshot or indicator set.
    pub fn wikis(&self) -> Result<Vec<WikiId>, StoreError> {
        let mut out: Vec<WikiId> = [StoreKind::Snapshot, StoreKind::Indicators]
            .into_iter()
            .map(|k| self.keys(k))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .filter_map(|k| k.subject.parse().ok())
            .collect();
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// All snapshots stored for `window`.
    pub fn snapshots(&self, window: Window) -> Result<Vec<WikiSnapshot>, StoreError> {
        self.latest_keys(StoreKind::Snapshot, Some(window))?
            .iter()
            .filter_map(|k| self.get_snapshot(k).transpose())
            .collect()
    }

    /// Values of one indicator for one wiki across stored windows whose start
    /// lies in `[from, to]`, ascending. Windows without the value are gaps.
    pub fn series(
        &self,
        wiki: &WikiId,
        indicator_id: &str,
        from: Option<Month>,
        to: Option<Month>,
    ) -> Result<Vec<SeriesPoint>, StoreError> {
        let subject = wiki.to_string();
        let mut points = Vec::new();
        for key in self.latest_keys(StoreKind::Indicators, None)? {
            let start = key.window.start();
            if key.subject != subject || from.is_some_and(|f| start < f) || to.is_some_and(|t| start > t) {
                continue;
            }
            if let Some(set) = self.get_indicators(&key)? {
                if let Some(v) = set.get(indicator_id) {
                    points.push(SeriesPoint { window: key.window, value: v.value.clone() });
                }
            }
        }
        points.sort_by(|a, b| (a.window.start(), a.window.end()).cmp(&(b.window.start(), b.window.end())));
        Ok(points)
    }
}

fn write_synced(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))?;
    f.sync_all().map_err(io_err(path))
}

fn read_dir_names(dir: &Path) -> Result<Vec<String>, StoreError> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(dir)(e)),
    };
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| !n.ends_with(".tmp") && !n.ends_with(".sha256"))
        .collect();
    names.sort();
    Ok(names)
}
