//! Offline inputs: snapshot fixture files, the operator-curated data file and
//! external provider score files.

use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::IngestError;
use crate::canonical;
use crate::model::{ScoreTable, WikiId, WikiSnapshot, SNAPSHOT_SCHEMA_VERSION};

fn read_file(path: &Path) -> Result<Vec<u8>, IngestError> {
    fs::read(path).map_err(|source| match source.kind() {
        ErrorKind::NotFound => IngestError::FileNotFound(path.to_path_buf()),
        _ => IngestError::Io { path: path.to_path_buf(), source },
    })
}

fn parse_file<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T, IngestError> {
    serde_json::from_slice(bytes)
        .map_err(|e| IngestError::Parse { context: path.display().to_string(), message: e.to_string() })
}

/// Loads one snapshot fixture and marks it as fixture-derived.
pub fn load_fixture_snapshot(path: &Path) -> Result<WikiSnapshot, IngestError> {
    let bytes = read_file(path)?;
    // Check the version before the full schema so an old file reports the
    // version, not whichever field happened to change.
    #[derive(Deserialize)]
    struct Probe {
        schema_version: u32,
    }
    let probe: Probe = parse_file(path, &bytes)?;
    if probe.schema_version != SNAPSHOT_SCHEMA_VERSION {
        return Err(IngestError::SchemaVersionMismatch {
            found: probe.schema_version,
            expected: SNAPSHOT_SCHEMA_VERSION,
        });
    }
    let mut snap: WikiSnapshot = parse_file(path, &bytes)?;
    snap.validate()
        .map_err(|e| IngestError::Parse { context: path.display().to_string(), message: e.to_string() })?;
    snap.fixture_origin = true;
    Ok(snap)
}

/// Canonical fixture-file rendering of a snapshot (without the in-memory
/// `fixture_origin` marker).
pub fn to_fixture_json(snapshot: &WikiSnapshot) -> String {
    let mut v = serde_json::to_value(snapshot).expect("snapshots serialize");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("fixture_origin");
    }
    canonical::to_canonical_string(&v).expect("snapshot values are finite")
}

/// Conventional fixture file name, e.g. `ja.wikipedia.2021-04.snapshot.json`.
pub fn fixture_file_name(snapshot: &WikiSnapshot) -> String {
    format!("{}.{}.snapshot.json", snapshot.id(), snapshot.window)
}

/// Loads every `*.snapshot.json` under `dir`, sorted by file name.
pub fn load_fixture_dir(dir: &Path) -> Result<Vec<WikiSnapshot>, IngestError> {
    let io = |source| IngestError::Io { path: dir.to_path_buf(), source };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| match e.kind() {
            ErrorKind::NotFound => IngestError::FileNotFound(dir.to_path_buf()),
            _ => io(e),
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".snapshot.json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_fixture_snapshot(p)).collect()
}

/// Per-wiki values maintained by hand because no API exposes them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuratedEntry {
    #[serde(default)]
    pub patrolling_tools: Option<u64>,
    #[serde(default)]
    pub stewards_with_language: Option<u64>,
    #[serde(default)]
    pub steward_requests: Option<u64>,
    #[serde(default)]
    pub deletion_requests: Option<u64>,
    /// Name of the stub tracking category, without the `Category:` prefix.
    #[serde(default)]
    pub stub_category: Option<String>,
    pub provenance: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CuratedData(pub BTreeMap<WikiId, CuratedEntry>);

impl CuratedData {
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        parse_file(path, &read_file(path)?)
    }

    pub fn get(&self, wiki: &WikiId) -> Option<&CuratedEntry> {
        self.0.get(wiki)
    }
}

/// Score tables from one external provider, keyed by wiki.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderFile {
    pub provider: String,
    pub provenance: String,
    pub scores: BTreeMap<WikiId, ScoreTable>,
}

impl ProviderFile {
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let file: ProviderFile = parse_file(path, &read_file(path)?)?;
        for (wiki, table) in &file.scores {
            if let Some((k, v)) = table.iter().find(|(_, v)| !v.is_finite()) {
                return Err(IngestError::Parse {
                    context: path.display().to_string(),
                    message: format!("non-finite score {v} for {wiki}/{k}"),
                });
            }
        }
        Ok(file)
    }
}

/// Everything a snapshot needs besides the live APIs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuxiliaryData {
    pub curated: CuratedData,
    pub providers: BTreeMap<String, ProviderFile>,
}

impl AuxiliaryData {
    /// Reads `{dir}/curated.json` and `{dir}/providers/*.json`. Either may be
    /// missing.
    pub fn load(dir: &Path) -> Result<Self, IngestError> {
        let curated_path = dir.join("curated.json");
        let curated = if curated_path.is_file() { CuratedData::load(&curated_path)? } else { CuratedData::default() };
        let mut providers = BTreeMap::new();
        let pdir = dir.join("providers");
        if pdir.is_dir() {
            let mut paths: Vec<PathBuf> = fs::read_dir(&pdir)
                .map_err(|source| IngestError::Io { path: pdir.clone(), source })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for p in paths {
                let file = ProviderFile::load(&p)?;
                if providers.contains_key(&file.provider) {
                    return Err(IngestError::Parse {
                        context: p.display().to_string(),
                        message: format!("provider {} defined twice", file.provider),
                    });
                }
                providers.insert(file.provider.clone(), file);
            }
        }
        Ok(AuxiliaryData { curated, providers })
    }

    /// Provider tables for one wiki, keyed by provider id.
    pub fn scores_for(&self, wiki: &WikiId) -> BTreeMap<String, ScoreTable> {
        self.providers
            .iter()
            .filter_map(|(id, f)| Some((id.clone(), f.scores.get(wiki)?.clone())))
            .collect()
    }
}
