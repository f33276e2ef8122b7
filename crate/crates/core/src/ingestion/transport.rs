//! HTTP transport abstraction with a live `reqwest` backend and a replay
//! backend over recorded payloads.
//!
//! A recorded exchange is a directory holding three files:
//!
//! * `request.json`: `{"method": "GET", "url": "..."}`
//! * `response.status`: the status code on the first line, optionally
//!   followed by `Name: value` header lines (e.g. `Retry-After: 7`)
//! * `response.body`: the raw body
//!
//! Several exchanges may share a URL; the replayer serves them in directory
//! name order and keeps serving the last one once the others are used up.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpRequest {
    pub method: String,
    pub url: String,
}

impl HttpRequest {
    pub fn get(url: impl Into<String>) -> Self {
        HttpRequest { method: "GET".into(), url: url.into() }
    }

    pub fn host(&self) -> &str {
        let rest = self.url.split_once("://").map_or(self.url.as_str(), |(_, r)| r);
        rest.split(['/', '?']).next().unwrap_or(rest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    /// Header names are lowercased.
    pub headers: BTreeMap<String, String>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn new(status: u16, body: impl Into<Vec<u8>>) -> Self {
        HttpResponse { status, headers: BTreeMap::new(), body: body.into() }
    }

    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        self.headers.insert(name.to_ascii_lowercase(), value.to_string());
        self
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(&name.to_ascii_lowercase()).map(String::as_str)
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("request timed out")]
    Timeout,
    #[error("{0}")]
    Other(String),
}

pub trait Transport: Send + Sync {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        (**self).execute(request)
    }
}

/// Live transport over blocking `reqwest`.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(user_agent: &str, timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(user_agent)
            .timeout(timeout)
            .build()
            .map_err(|e| TransportError::Other(e.to_string()))?;
        Ok(ReqwestTransport { client })
    }
}

impl Transport for ReqwestTransport {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let method = reqwest::Method::from_bytes(request.method.as_bytes())
            .map_err(|e| TransportError::Other(e.to_string()))?;
        let resp = self.client.request(method, &request.url).send().map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Connect(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_ascii_lowercase(), v.to_str().ok()?.to_string())))
            .collect();
        let body = resp.bytes().map_err(|e| TransportError::Other(e.to_string()))?.to_vec();
        Ok(HttpResponse { status, headers, body })
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("I/O error under {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed recording {path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

/// Replays recorded exchanges. Requests for URLs with no recording get a 404.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    exchanges: Mutex<HashMap<String, VecDeque<HttpResponse>>>,
    served: AtomicUsize,
    log: Mutex<Vec<HttpRequest>>,
}

impl ReplayTransport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads every exchange directory below `root`.
    pub fn load(root: &Path) -> Result<Self, ReplayError> {
        let mut dirs = Vec::new();
        collect_exchange_dirs(root, &mut dirs)?;
        dirs.sort();
        let t = ReplayTransport::new();
        for dir in dirs {
            let (req, resp) = read_exchange(&dir)?;
            t.push(&req.url, resp);
        }
        Ok(t)
    }

    pub fn push(&self, url: &str, response: HttpResponse) {
        self.exchanges.lock().unwrap().entry(url.to_string()).or_default().push_back(response);
    }

    pub fn requests_served(&self) -> usize {
        self.served.load(Ordering::SeqCst)
    }

    pub fn request_log(&self) -> Vec<HttpRequest> {
        self.log.lock().unwrap().clone()
    }
}

impl Transport for ReplayTransport {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        self.served.fetch_add(1, Ordering::SeqCst);
        self.log.lock().unwrap().push(request.clone());
        let mut map = self.exchanges.lock().unwrap();
        let Some(queue) = map.get_mut(&request.url) else {
            return Ok(HttpResponse::new(404, Vec::new()));
        };
        let resp = if queue.len() > 1 { queue.pop_front() } else { queue.front().cloned() };
        Ok(resp.expect("queues are never empty"))
    }
}

fn collect_exchange_dirs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), ReplayError> {
    let io = |source| ReplayError::Io { path: dir.to_path_buf(), source };
    if dir.join("request.json").is_file() {
        out.push(dir.to_path_buf());
        return Ok(());
    }
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            collect_exchange_dirs(&path, out)?;
        }
    }
    Ok(())
}

fn read_exchange(dir: &Path) -> Result<(HttpRequest, HttpResponse), ReplayError> {
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read(&path).map_err(|source| ReplayError::Io { path, source })
    };
    let malformed = |message: String| ReplayError::Malformed { path: dir.to_path_buf(), message };
    let req: HttpRequest =
        serde_json::from_slice(&read("request.json")?).map_err(|e| malformed(e.to_string()))?;
    let status_text = String::from_utf8(read("response.status")?).map_err(|e| malformed(e.to_string()))?;
    let mut lines = status_text.lines();
    let status: u16 = lines
        .next()
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| malformed("response.status has no status code".into()))?;
    let mut resp = HttpResponse::new(status, read("response.body")?);
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let (k, v) = line.split_once(':').ok_or_else(|| malformed(format!("bad header line `{line}`")))?;
        resp = resp.with_header(k.trim(), v.trim());
    }
    Ok((req, resp))
}

/// Writes every exchange passing through it into the recorded-payload layout,
/// one numbered directory per request.
pub struct RecordingTransport<T> {
    inner: T,
    root: PathBuf,
    counter: AtomicUsize,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, root: impl Into<PathBuf>) -> Self {
        RecordingTransport { inner, root: root.into(), counter: AtomicUsize::new(0) }
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let resp = self.inner.execute(request)?;
        let n = self.counter.fetch_add(1, Ordering::SeqCst);
        let dir = self.root.join(format!("{n:05}"));
        let write = || -> std::io::Result<()> {
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("request.json"), serde_json::to_vec_pretty(request)?)?;
            let mut status = format!("{}\n", resp.status);
            if let Some(ra) = resp.header("retry-after") {
                status.push_str(&format!("Retry-After: {ra}\n"));
            }
            fs::write(dir.join("response.status"), status)?;
            fs::write(dir.join("response.body"), &resp.body)
        };
        write().map_err(|e| TransportError::Other(format!("recording failed: {e}")))?;
        Ok(resp)
    }
}
