//! Capturing raw per-wiki facts from the Wikimedia HTTP APIs, recorded
//! payloads, or fixture files.

pub mod client;
pub mod clock;
pub mod fetch;
pub mod fixture;
pub mod parse;
pub mod snapshot;
pub mod transport;

use std::path::PathBuf;

use thiserror::Error;

pub use crate::model::SourceKind;
use crate::model::WikiId;
pub use client::{ApiClient, FetchPolicy, Telemetry};
pub use clock::{Clock, ManualClock, SystemClock};
pub use fetch::{ActivityLevel, Endpoints, WikiFetcher};
pub use fixture::{load_fixture_snapshot, to_fixture_json, AuxiliaryData, CuratedData, CuratedEntry, ProviderFile};
pub use parse::{bucket_estimate, BucketedCount};
pub use snapshot::{recorded_wikis, replay_epoch, Ingestor};
pub use transport::{HttpRequest, HttpResponse, RecordingTransport, ReplayTransport, ReqwestTransport, Transport};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("network error for {url}: {message}")]
    Network { url: String, message: String },
    #[error("HTTP {status} for {url}")]
    Http { url: String, status: u16 },
    #[error("cannot parse {context}: {message}")]
    Parse { context: String, message: String },
    #[error("unknown wiki {0}")]
    UnknownWiki(WikiId),
    #[error("no data for {what}")]
    NoData { what: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("snapshot schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot snapshot {wiki}: {source}")]
    HardFailure { wiki: WikiId, source: Box<IngestError> },
    #[error("invalid fetch policy: {0}")]
    InvalidPolicy(String),
}

impl IngestError {
    /// Whether a failed run may succeed later without operator action.
    pub fn is_transient(&self) -> bool {
        match self {
            IngestError::Network { .. } => true,
            IngestError::Http { status, .. } => *status == 429 || *status >= 500,
            IngestError::HardFailure { source, .. } => source.is_transient(),
            _ => false,
        }
    }
}
