//! Read-only HTTP facade over a result store. Every body is canonical JSON so
//! repeated calls against the same store state return identical bytes.

pub mod error;
pub mod routes;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use observatory_core::canonical;
use observatory_core::storage::{Store, StoreError};
use observatory_core::Registry;
use serde::Serialize;
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::set_header::SetResponseHeaderLayer;

pub use error::{ApiError, ApiErrorBody};

pub const API_VERSION: &str = "1";
pub const API_VERSION_HEADER: &str = "x-api-version";

pub struct AppState {
    pub store: Store,
    pub registry: Registry,
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub store_root: PathBuf,
    /// Origin allowed by CORS; `None` allows any origin.
    pub cors_origin: Option<String>,
    pub registry: Registry,
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("store unavailable: {0}")]
    StoreUnavailable(StoreError),
    #[error("invalid CORS origin `{0}`")]
    InvalidOrigin(String),
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn bytes_response(status: StatusCode, bytes: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

pub(crate) fn canonical_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match canonical::to_canonical_vec(body) {
        Ok(bytes) => bytes_response(status, bytes),
        Err(e) => {
            log::error!("cannot encode response: {e}");
            let body = ApiErrorBody { code: "internal".into(), message: "response encoding failed".into() };
            let bytes = canonical::to_canonical_vec(&body).expect("error body encodes");
            bytes_response(StatusCode::INTERNAL_SERVER_ERROR, bytes)
        }
    }
}

async fn no_route() -> ApiError {
    ApiError::not_found("no such endpoint")
}

async fn wrong_method() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "the API is read-only; use GET")
}

/// The `/api/v1` router over `state`.
pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Result<Router, ServeError> {
    let allow_origin = match cors_origin {
        None => AllowOrigin::any(),
        Some(o) => AllowOrigin::exact(HeaderValue::from_str(o).map_err(|_| ServeError::InvalidOrigin(o.into()))?),
    };
    let cors = CorsLayer::new()
        .allow_origin(allow_origin)
        .allow_methods([Method::GET, Method::OPTIONS])
        .expose_headers([header::HeaderName::from_static(API_VERSION_HEADER)]);
    let api = Router::new()
        .route("/health", get(routes::health))
        .route("/taxonomy", get(routes::get_taxonomy))
        .route("/wikis", get(routes::list_wikis))
        .route("/wikis/{code}/indicators", get(routes::wiki_indicators))
        .route("/wikis/{code}/series/{indicator_id}", get(routes::wiki_series))
        .route("/matrix", get(routes::matrix))
        .route("/rankings/{indicator_id}", get(routes::rankings))
        .route("/scatter", get(routes::scatter))
        .method_not_allowed_fallback(wrong_method);
    Ok(Router::new()
        .nest("/api/v1", api)
        .fallback(no_route)
        .with_state(state)
        .layer(cors)
        .layer(SetResponseHeaderLayer::overriding(
            header::HeaderName::from_static(API_VERSION_HEADER),
            HeaderValue::from_static(API_VERSION),
        )))
}

/// A bound but not yet running server.
pub struct Server {
    listener: TcpListener,
    app: Router,
}

impl Server {
    pub async fn bind(config: ServeConfig) -> Result<Self, ServeError> {
        let store = Store::open_read_only(&config.store_root).map_err(ServeError::StoreUnavailable)?;
        let app = router(Arc::new(AppState { store, registry: config.registry }), config.cors_origin.as_deref())?;
        let listener =
            TcpListener::bind(config.addr).await.map_err(|source| ServeError::Bind { addr: config.addr, source })?;
        Ok(Server { listener, app })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until `shutdown` resolves, then drains in-flight requests.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
        axum::serve(self.listener, self.app).with_graceful_shutdown(shutdown).await?;
        Ok(())
    }
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutdown requested, draining");
}
