//! JSON error bodies: `{"error": {"code", "message", "stage"?, "current_version"?, "violations"?}}`.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use planglow_core::pipeline::{GenerationFailure, PipelineError};
use planglow_core::plan::{CodecError, Violation};
use planglow_core::resources::ResourceError;
use planglow_core::revision::RevisionError;
use serde::Serialize;

use crate::events::EventError;
use crate::store::StoreError;

/// Stage name reported for catalog failures.
pub const CATALOG_STAGE: &str = "catalog";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub current_version: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code,
                message: message.into(),
                stage: None,
                current_version: None,
                violations: Vec::new(),
            },
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn invalid(violations: Vec<Violation>) -> Self {
        let message = violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        let mut e = Self::new(StatusCode::BAD_REQUEST, "validation_failed", message);
        e.body.violations = violations;
        e
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn conflict(plan_id: &str, current: u64) -> Self {
        let mut e = Self::new(
            StatusCode::CONFLICT,
            "version_conflict",
            format!("plan `{plan_id}` is at version {current}"),
        );
        e.body.current_version = Some(current);
        e
    }

    pub fn upstream(stage: impl Into<String>, message: impl Into<String>) -> Self {
        let mut e = Self::new(StatusCode::BAD_GATEWAY, "upstream_failure", message);
        e.body.stage = Some(stage.into());
        e
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.body }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Conflict { plan_id, current } => ApiError::conflict(&plan_id, current),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<EventError> for ApiError {
    fn from(e: EventError) -> Self {
        match e {
            EventError::Payload(_) => ApiError::bad_request(e.to_string()),
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match &e {
            PipelineError::InvalidProfile(v) => ApiError::invalid(v.clone()),
            PipelineError::EmptySubject => ApiError::bad_request(e.to_string()),
            PipelineError::Template(_) => ApiError::internal(e.to_string()),
            _ => {
                let stage = e.stage().map(|s| s.as_str()).unwrap_or("generation");
                ApiError::upstream(stage, e.to_string())
            }
        }
    }
}

impl From<GenerationFailure> for ApiError {
    fn from(f: GenerationFailure) -> Self {
        f.error.into()
    }
}

impl From<ResourceError> for ApiError {
    fn from(e: ResourceError) -> Self {
        match e {
            ResourceError::Catalog(_) => ApiError::upstream(CATALOG_STAGE, e.to_string()),
            ResourceError::NotFound { .. } => ApiError::not_found(e.to_string()),
            ResourceError::NotVideo(_)
            | ResourceError::Unavailable(_)
            | ResourceError::InvalidQuery(_)
            | ResourceError::InvalidPlan(_) => ApiError::bad_request(e.to_string()),
        }
    }
}

impl From<RevisionError> for ApiError {
    fn from(e: RevisionError) -> Self {
        match e {
            RevisionError::InvalidEdit(v) | RevisionError::InvalidPlan(v) => ApiError::invalid(v),
            RevisionError::EmptyMessage => ApiError::bad_request(e.to_string()),
            RevisionError::Generation(f) => (*f).into(),
            RevisionError::Pipeline(p) => p.into(),
            RevisionError::Resource(r) => r.into(),
        }
    }
}

/// A stored document failed to parse; the store is damaged.
impl From<CodecError> for ApiError {
    fn from(e: CodecError) -> Self {
        ApiError::internal(format!("stored plan is unreadable: {e}"))
    }
}
