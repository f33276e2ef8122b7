use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use observatory_core::storage::StoreError;
use serde::{Deserialize, Serialize};

use crate::canonical_response;

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    pub fn unknown_wiki(wiki: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_wiki", format!("no data is stored for wiki `{wiki}`"))
    }

    pub fn unknown_indicator(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_indicator", format!("indicator `{id}` is not in the registry"))
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn invalid_parameter(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_parameter", message)
    }

    pub fn insufficient_data(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "insufficient_data", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Unavailable { .. } => Self::new(StatusCode::SERVICE_UNAVAILABLE, "store_unavailable", e.to_string()),
            StoreError::Integrity { .. } => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "store_integrity", e.to_string()),
            other => Self::internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            log::error!("{}: {}", self.code, self.message);
        }
        canonical_response(self.status, &ApiErrorBody { code: self.code.to_string(), message: self.message })
    }
}
