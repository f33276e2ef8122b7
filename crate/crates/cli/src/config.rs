//! Operator configuration: a JSON file, overridden by `OBSERVATORY_<KEY>`
//! environment variables, overridden in turn by command-line flags.

use std::path::{Path, PathBuf};
use std::time::Duration;

use observatory_core::engine::DEFAULT_MIN_ARTICLES;
use observatory_core::ingestion::FetchPolicy;
use observatory_core::metrics::LogBase;
use serde::Deserialize;
use serde_json::{Map, Value};
use thiserror::Error;

pub const ENV_PREFIX: &str = "OBSERVATORY_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown environment override {0}")]
    UnknownEnv(String),
    #[error("environment override {key}: {message}")]
    BadEnv { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FetchConfig {
    pub max_in_flight: usize,
    pub min_request_interval_ms: u64,
    pub max_retries: u32,
    pub backoff_initial_ms: u64,
    pub backoff_multiplier: f64,
    pub timeout_ms: u64,
    pub user_agent: String,
}

impl Default for FetchConfig {
    fn default() -> Self {
        let p = FetchPolicy::default();
        FetchConfig {
            max_in_flight: p.max_in_flight,
            min_request_interval_ms: p.min_request_interval.as_millis() as u64,
            max_retries: p.max_retries,
            backoff_initial_ms: p.backoff_initial.as_millis() as u64,
            backoff_multiplier: p.backoff_multiplier,
            timeout_ms: p.timeout.as_millis() as u64,
            user_agent: p.user_agent,
        }
    }
}

impl FetchConfig {
    pub fn policy(&self) -> FetchPolicy {
        FetchPolicy {
            max_in_flight: self.max_in_flight,
            min_request_interval: Duration::from_millis(self.min_request_interval_ms),
            max_retries: self.max_retries,
            backoff_initial: Duration::from_millis(self.backoff_initial_ms),
            backoff_multiplier: self.backoff_multiplier,
            timeout: Duration::from_millis(self.timeout_ms),
            user_agent: self.user_agent.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub store: Option<PathBuf>,
    /// Default cohort for live ingestion, as `code` or `code.family`.
    pub wikis: Vec<String>,
    pub fetch: FetchConfig,
    /// Registry entries to leave out of computation.
    pub disabled_indicators: Vec<String>,
    pub democracy_index: Option<PathBuf>,
    /// Directory holding `curated.json` and `providers/`.
    pub aux_dir: Option<PathBuf>,
    pub min_articles: u64,
    pub entropy_base: LogBase,
    pub jobs: usize,
    pub listen: String,
    pub cors_origin: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            store: None,
            wikis: Vec::new(),
            fetch: FetchConfig::default(),
            disabled_indicators: Vec::new(),
            democracy_index: None,
            aux_dir: None,
            min_articles: DEFAULT_MIN_ARTICLES,
            entropy_base: LogBase::Natural,
            jobs: 4,
            listen: "127.0.0.1:8080".into(),
            cors_origin: None,
        }
    }
}

#[derive(Clone, Copy)]
enum Shape {
    Text,
    Number,
    List,
}

/// Keys settable from the environment, with `fetch_` standing for the
/// nested fetch section.
const ENV_KEYS: &[(&str, Shape)] = &[
    ("store", Shape::Text),
    ("wikis", Shape::List),
    ("disabled_indicators", Shape::List),
    ("democracy_index", Shape::Text),
    ("aux_dir", Shape::Text),
    ("min_articles", Shape::Number),
    ("entropy_base", Shape::Text),
    ("jobs", Shape::Number),
    ("listen", Shape::Text),
    ("cors_origin", Shape::Text),
    ("fetch_max_in_flight", Shape::Number),
    ("fetch_min_request_interval_ms", Shape::Number),
    ("fetch_max_retries", Shape::Number),
    ("fetch_backoff_initial_ms", Shape::Number),
    ("fetch_backoff_multiplier", Shape::Number),
    ("fetch_timeout_ms", Shape::Number),
    ("fetch_user_agent", Shape::Text),
];

fn env_value(key: &str, shape: Shape, raw: &str) -> Result<Value, ConfigError> {
    Ok(match shape {
        Shape::Text => Value::String(raw.to_string()),
        Shape::List => {
            Value::Array(raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| Value::String(s.into())).collect())
        }
        Shape::Number => serde_json::from_str::<serde_json::Number>(raw.trim())
            .map(Value::Number)
            .map_err(|_| ConfigError::BadEnv { key: key.into(), message: format!("`{raw}` is not a number") })?,
    })
}

impl Config {
    /// Reads `path` (if any), applies overrides from `env`, and resolves
    /// relative paths against the config file's directory.
    pub fn load(path: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigError> {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.into(), source })?;
                match serde_json::from_str::<Value>(&text).map_err(|e| ConfigError::Invalid(e.to_string()))? {
                    Value::Object(m) => m,
                    _ => return Err(ConfigError::Invalid("top level must be an object".into())),
                }
            }
            None => Map::new(),
        };
        let mut env: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        env.sort();
        let base = path.and_then(Path::parent).map(Path::to_path_buf);
        let mut from_env = Vec::new();
        for (var, raw) in env {
            let key = var[ENV_PREFIX.len()..].to_ascii_lowercase();
            let Some((_, shape)) = ENV_KEYS.iter().find(|(k, _)| *k == key) else {
                return Err(ConfigError::UnknownEnv(var));
            };
            let value = env_value(&var, *shape, &raw)?;
            match key.strip_prefix("fetch_") {
                Some(field) => {
                    let fetch = root.entry("fetch").or_insert_with(|| Value::Object(Map::new()));
                    let Value::Object(fetch) = fetch else {
                        return Err(ConfigError::Invalid("`fetch` must be an object".into()));
                    };
                    fetch.insert(field.to_string(), value);
                }
                None => {
                    from_env.push(key.clone());
                    root.insert(key, value);
                }
            }
        }
        let mut config: Config =
            serde_json::from_value(Value::Object(root)).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        // Paths from the file are relative to it; paths from the environment
        // are relative to the working directory.
        if let Some(base) = base {
            let resolve = |field: &str, p: &mut Option<PathBuf>| {
                if let Some(p) = p.as_mut().filter(|p| p.is_relative() && !from_env.iter().any(|k| k == field)) {
                    *p = base.join(&*p);
                }
            };
            resolve("store", &mut config.store);
            resolve("democracy_index", &mut config.democracy_index);
            resolve("aux_dir", &mut config.aux_dir);
        }
        if config.jobs == 0 {
            return Err(ConfigError::Invalid("`jobs` must be at least 1".into()));
        }
        Ok(config)
    }
}
