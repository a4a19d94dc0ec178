#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use planglow_core::llm::{
    load_transcript, ProviderError, ProviderRequest, ProviderResponse, ScriptedProvider, StageTag,
    TextProvider,
};
use planglow_core::testkit::{
    self, fixed_pipeline, mock_catalog, CATALOG_FIXTURE, TRANSCRIPT_FIXTURE,
};
use planglow_service::{router, AppState, Config, Engine, Mode};
use serde_json::Value;
use tower::ServiceExt;

pub fn shipped(name: &str) -> String {
    std::fs::read_to_string(testkit::fixture_path(name)).unwrap()
}

pub fn test_config(data_dir: &Path) -> Config {
    Config {
        mode: Mode::Test,
        data_dir: data_dir.to_path_buf(),
        transcript: Some(testkit::fixture_path(TRANSCRIPT_FIXTURE)),
        catalog: Some(testkit::fixture_path(CATALOG_FIXTURE)),
        ..Config::default()
    }
}

/// Test-mode state built from the shipped fixtures, as `serve` would.
pub fn shipped_state(data_dir: &Path) -> AppState {
    let config = test_config(data_dir);
    AppState::open(config.engine().unwrap(), &config.data_dir).unwrap()
}

pub fn state_with(data_dir: &Path, provider: Arc<dyn TextProvider>) -> AppState {
    let engine = Engine::new(fixed_pipeline(), provider, Arc::new(mock_catalog()));
    AppState::open(engine, data_dir).unwrap()
}

pub fn shipped_transcript() -> ScriptedProvider {
    load_transcript(&shipped(TRANSCRIPT_FIXTURE)).unwrap()
}

/// Scripted provider whose fixture table can lose a stage mid-test.
pub struct GappableProvider {
    full: ScriptedProvider,
    gap: Mutex<Option<(StageTag, ScriptedProvider)>>,
}

impl GappableProvider {
    pub fn new(full: ScriptedProvider) -> Self {
        Self {
            full,
            gap: Mutex::new(None),
        }
    }

    pub fn open_gap(&self, stage: StageTag) {
        *self.gap.lock().unwrap() = Some((stage, self.full.clone().without_stage(stage)));
    }

    pub fn close_gap(&self) {
        *self.gap.lock().unwrap() = None;
    }
}

impl TextProvider for GappableProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        match &*self.gap.lock().unwrap() {
            Some((_, gapped)) => gapped.complete(request),
            None => self.full.complete(request),
        }
    }
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.body)
            .unwrap_or_else(|e| panic!("non-JSON body {:?}: {e}", self.body))
    }
}

pub async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
    session: Option<&str>,
) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(s) = session {
        req = req.header("x-planglow-session", s);
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    Reply {
        status,
        headers,
        body: String::from_utf8(bytes.to_vec()).unwrap(),
    }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None, None).await
}

pub async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some(body), None).await
}

pub fn app(state: &AppState) -> Router {
    router(state.clone())
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}
