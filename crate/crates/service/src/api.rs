//! REST handlers under `/v1`.
//!
//! Engine calls run on the blocking pool. Mutations check the caller's
//! expected version up front and again at commit through the store's
//! compare-and-append, so of two concurrent edits exactly one lands.
//! Each successful request that maps to an interaction is logged as one
//! event; the two explanation-view events are reported by the client.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{FromRequest, FromRequestParts, Query, Request, State};
use axum::http::header::{CONTENT_TYPE, LOCATION};
use axum::http::request::Parts;
use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use planglow_core::fingerprint::fingerprint;
use planglow_core::pipeline::{plan_id_for, GenerateOptions, TraceOutcome};
use planglow_core::plan::codec::canonical_json;
use planglow_core::plan::{
    deserialize_plan, lint_plan, serialize_plan, BackgroundLevel, ChangeRecord, LearnerProfile,
    LintConfig, PlanQualityReport, StudyPlan,
};
use planglow_core::resources::{
    replace_resource, resolve_resources, search_alternatives, AlternativeQuery, RankedCandidate,
    ResourceError, MAX_ALTERNATIVES,
};
use planglow_core::revision::{InlineEdit, Intent};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::Engine;
use crate::error::ApiError;
use crate::events::{EventLog, EventType, InteractionEvent, Payload, SessionSummary};
use crate::store::{PlanStore, StoreError};
use crate::ServiceError;

pub const SESSION_HEADER: &str = "x-planglow-session";
pub const TRACE_HEADER: &str = "x-planglow-trace-id";
pub const DEFAULT_SESSION: &str = "anonymous";
const MAX_SESSION_LEN: usize = 128;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    engine: Engine,
    store: PlanStore,
    events: EventLog,
    lint: LintConfig,
    session_seq: AtomicU64,
}

impl AppState {
    /// Opens (or creates) `plans.redb` and `events.jsonl` under `data_dir`.
    pub fn open(engine: Engine, data_dir: &Path) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(data_dir)?;
        let store = PlanStore::open(&data_dir.join("plans.redb"))?;
        let events = EventLog::open(&data_dir.join("events.jsonl"))?;
        let seq = store.session_count()?;
        Ok(Self {
            inner: Arc::new(Inner {
                engine,
                store,
                events,
                lint: LintConfig::default(),
                session_seq: AtomicU64::new(seq),
            }),
        })
    }

    pub fn store(&self) -> &PlanStore {
        &self.inner.store
    }

    pub fn events(&self) -> &EventLog {
        &self.inner.events
    }

    pub fn engine(&self) -> &Engine {
        &self.inner.engine
    }

    fn record(
        &self,
        session: &str,
        event_type: EventType,
        plan_id: Option<&str>,
        payload: Payload,
    ) -> Result<InteractionEvent, ApiError> {
        Ok(self.inner.events.append(InteractionEvent {
            session_id: session.to_string(),
            event_type,
            plan_id: plan_id.map(str::to_string),
            payload,
            at: self.inner.engine.pipeline.now(),
        })?)
    }

    fn head_plan(&self, plan_id: &str) -> Result<(u64, StudyPlan), ApiError> {
        let (version, doc) = self
            .inner
            .store
            .latest(plan_id)?
            .ok_or_else(|| unknown_plan(plan_id))?;
        Ok((version, deserialize_plan(&doc)?))
    }

    fn version_doc(&self, plan_id: &str, version: u64) -> Result<String, ApiError> {
        if self.inner.store.head(plan_id)?.is_none() {
            return Err(unknown_plan(plan_id));
        }
        self.inner.store.get(plan_id, version)?.ok_or_else(|| {
            ApiError::not_found(format!("plan `{plan_id}` has no version {version}"))
        })
    }

    fn plan_at(&self, plan_id: &str, version: Option<u64>) -> Result<StudyPlan, ApiError> {
        match version {
            Some(v) => Ok(deserialize_plan(&self.version_doc(plan_id, v)?)?),
            None => Ok(self.head_plan(plan_id)?.1),
        }
    }
}

fn unknown_plan(plan_id: &str) -> ApiError {
    ApiError::not_found(format!("unknown plan `{plan_id}`"))
}

fn check_expected(plan_id: &str, expected: u64, head: u64) -> Result<(), ApiError> {
    if expected == head {
        Ok(())
    } else {
        Err(ApiError::conflict(plan_id, head))
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

/// JSON body whose rejections use the API error format.
pub struct JsonBody<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for JsonBody<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        serde_json::from_slice(&bytes)
            .map(JsonBody)
            .map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
    }
}

pub struct ApiQuery<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for ApiQuery<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        Query::<T>::from_request_parts(parts, state)
            .await
            .map(|Query(v)| ApiQuery(v))
            .map_err(|e| ApiError::bad_request(e.body_text()))
    }
}

pub struct ApiPath<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned + Send> FromRequestParts<S> for ApiPath<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        axum::extract::Path::<T>::from_request_parts(parts, state)
            .await
            .map(|axum::extract::Path(v)| ApiPath(v))
            .map_err(|e| ApiError::bad_request(e.body_text()))
    }
}

/// Session id from the `x-planglow-session` header.
pub struct SessionId(pub String);

impl<S: Send + Sync> FromRequestParts<S> for SessionId {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, ApiError> {
        let Some(raw) = parts.headers.get(SESSION_HEADER) else {
            return Ok(SessionId(DEFAULT_SESSION.into()));
        };
        let id = raw
            .to_str()
            .map_err(|_| ApiError::bad_request("session header must be ASCII"))?;
        let ok = !id.is_empty()
            && id.len() <= MAX_SESSION_LEN
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
        if !ok {
            return Err(ApiError::bad_request(format!(
                "session id must be 1..={MAX_SESSION_LEN} characters of [A-Za-z0-9._-]"
            )));
        }
        Ok(SessionId(id.to_string()))
    }
}

fn document(status: StatusCode, doc: String, headers: Vec<(HeaderName, String)>) -> Response {
    let mut res = (status, [(CONTENT_TYPE, "application/json")], doc).into_response();
    for (name, value) in headers {
        if let Ok(v) = HeaderValue::from_str(&value) {
            res.headers_mut().insert(name, v);
        }
    }
    res
}

fn trace_header(trace_id: &str) -> (HeaderName, String) {
    (HeaderName::from_static(TRACE_HEADER), trace_id.to_string())
}

fn serialize(plan: &StudyPlan) -> Result<String, ApiError> {
    serialize_plan(plan)
        .map_err(|e| ApiError::internal(format!("engine produced an invalid plan: {e}")))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/plans", post(create_plan))
        .route("/v1/plans/{id}", get(get_plan))
        .route("/v1/plans/{id}/versions", get(list_versions))
        .route("/v1/plans/{id}/versions/{version}", get(get_version))
        .route("/v1/plans/{id}/versions/{version}/trace", get(get_trace))
        .route("/v1/plans/{id}/edits", post(edit_plan))
        .route("/v1/plans/{id}/chat", post(chat))
        .route("/v1/plans/{id}/alternatives", get(alternatives))
        .route("/v1/plans/{id}/resources/replace", post(replace))
        .route("/v1/plans/{id}/lint", get(lint))
        .route("/v1/levels", get(levels))
        .route("/v1/events", post(post_event))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}/summary", get(session_summary))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .layer(middleware::from_fn(log_requests))
        .with_state(state)
}

/// One structured line per request.
async fn log_requests(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let start = Instant::now();
    let res = next.run(req).await;
    tracing::info!(
        target: "planglow::http",
        method = %method,
        path = %path,
        status = res.status().as_u16(),
        latency_ms = start.elapsed().as_millis() as u64,
        "request"
    );
    res
}

async fn create_plan(
    State(state): State<AppState>,
    SessionId(session): SessionId,
    JsonBody(profile): JsonBody<LearnerProfile>,
) -> Result<Response, ApiError> {
    let violations = profile.violations();
    if !violations.is_empty() {
        return Err(ApiError::invalid(violations));
    }
    let st = state.clone();
    let (plan, doc, trace_id) = blocking(move || {
        let store = st.store();
        let mut nonce = 0;
        while store.head(plan_id_for(&profile, nonce).as_str())?.is_some() {
            nonce += 1;
        }
        let engine = st.engine();
        let options = GenerateOptions {
            plan_id: Some(plan_id_for(&profile, nonce)),
            ..GenerateOptions::default()
        };
        let (fresh, mut trace) = engine
            .pipeline
            .generate(&profile, &engine.provider, options)?;
        let (mut plan, _, _) = resolve_resources(&fresh, &engine.catalog)?;
        loop {
            let doc = serialize(&plan)?;
            match store.append(
                plan.plan_id.as_str(),
                0,
                1,
                &doc,
                Some(&canonical_json(&trace)),
            ) {
                Ok(()) => return Ok((plan, doc, trace.trace_id)),
                // Another request took this id in the meantime.
                Err(StoreError::Conflict { .. }) => {
                    nonce += 1;
                    plan.plan_id = plan_id_for(&profile, nonce);
                    trace.outcome = TraceOutcome::Plan {
                        plan_id: plan.plan_id.clone(),
                        version: 1,
                    };
                }
                Err(e) => return Err(e.into()),
            }
        }
    })
    .await?;
    let id = plan.plan_id.as_str();
    let mut payload = Payload::new();
    payload.insert("subject".into(), json!(plan.profile.subject));
    payload.insert("duration_weeks".into(), json!(plan.profile.duration_weeks));
    state.record(&session, EventType::SubmittedForm, Some(id), payload)?;
    Ok(document(
        StatusCode::CREATED,
        doc,
        vec![
            (LOCATION, format!("/v1/plans/{id}")),
            trace_header(&trace_id),
        ],
    ))
}

async fn get_plan(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
) -> Result<Response, ApiError> {
    let (_, doc) = state
        .store()
        .latest(&id)?
        .ok_or_else(|| unknown_plan(&id))?;
    Ok(document(StatusCode::OK, doc, vec![]))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VersionInfo {
    pub version: u64,
    pub has_trace: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VersionList {
    pub plan_id: String,
    pub head: u64,
    pub versions: Vec<VersionInfo>,
}

async fn list_versions(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
) -> Result<Json<VersionList>, ApiError> {
    let head = state.store().head(&id)?.ok_or_else(|| unknown_plan(&id))?;
    let versions = state
        .store()
        .versions(&id)?
        .into_iter()
        .map(|(version, has_trace)| VersionInfo { version, has_trace })
        .collect();
    Ok(Json(VersionList {
        plan_id: id,
        head,
        versions,
    }))
}

async fn get_version(
    State(state): State<AppState>,
    ApiPath((id, version)): ApiPath<(String, u64)>,
) -> Result<Response, ApiError> {
    Ok(document(
        StatusCode::OK,
        state.version_doc(&id, version)?,
        vec![],
    ))
}

async fn get_trace(
    State(state): State<AppState>,
    ApiPath((id, version)): ApiPath<(String, u64)>,
) -> Result<Response, ApiError> {
    state.version_doc(&id, version)?;
    let trace = state.store().trace(&id, version)?.ok_or_else(|| {
        ApiError::not_found(format!(
            "version {version} of `{id}` was not generated and has no trace"
        ))
    })?;
    Ok(document(StatusCode::OK, trace, vec![]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditRequest {
    pub expected_version: u64,
    #[serde(flatten)]
    pub edit: InlineEdit,
}

async fn edit_plan(
    State(state): State<AppState>,
    SessionId(session): SessionId,
    ApiPath(id): ApiPath<String>,
    JsonBody(req): JsonBody<EditRequest>,
) -> Result<Response, ApiError> {
    let (head, plan) = state.head_plan(&id)?;
    check_expected(&id, req.expected_version, head)?;
    let st = state.clone();
    let edit = req.edit.clone();
    let (doc, version, trace_id) = blocking(move || {
        let engine = st.engine();
        let (updated, trace) =
            engine
                .pipeline
                .apply_inline_edit(&plan, &edit, &engine.provider, &engine.catalog)?;
        let doc = serialize(&updated)?;
        st.store().append(
            updated.plan_id.as_str(),
            head,
            updated.version,
            &doc,
            Some(&canonical_json(&trace)),
        )?;
        Ok((doc, updated.version, trace.trace_id))
    })
    .await?;
    let mut payload = Payload::new();
    payload.insert("field".into(), json!(req.edit.field()));
    payload.insert("version".into(), json!(version));
    state.record(&session, EventType::InlineEdit, Some(&id), payload)?;
    Ok(document(StatusCode::OK, doc, vec![trace_header(&trace_id)]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub message: String,
    #[serde(default)]
    pub expected_version: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatReply {
    pub intent: Intent,
    pub reply: String,
    /// Head version after this turn.
    pub version: u64,
    pub changes: Vec<ChangeRecord>,
    #[serde(default)]
    pub trace_id: Option<String>,
    /// The new plan document for edit turns.
    #[serde(default)]
    pub plan: Option<Value>,
}

async fn chat(
    State(state): State<AppState>,
    SessionId(session): SessionId,
    ApiPath(id): ApiPath<String>,
    JsonBody(req): JsonBody<ChatRequest>,
) -> Result<Json<ChatReply>, ApiError> {
    let (head, plan) = state.head_plan(&id)?;
    if let Some(expected) = req.expected_version {
        check_expected(&id, expected, head)?;
    }
    let st = state.clone();
    let message = req.message.clone();
    let reply = blocking(move || {
        let engine = st.engine();
        let outcome =
            engine
                .pipeline
                .handle_chat(&plan, &message, &engine.provider, &engine.catalog)?;
        let mut reply = ChatReply {
            intent: outcome.intent,
            reply: outcome.reply,
            version: head,
            changes: outcome.changes,
            trace_id: None,
            plan: None,
        };
        if let (Some(updated), Some(trace)) = (outcome.plan, outcome.trace) {
            let doc = serialize(&updated)?;
            st.store().append(
                updated.plan_id.as_str(),
                head,
                updated.version,
                &doc,
                Some(&canonical_json(&trace)),
            )?;
            reply.version = updated.version;
            reply.trace_id = Some(trace.trace_id);
            reply.plan = Some(serde_json::from_str(&doc).expect("canonical document is JSON"));
        }
        Ok(reply)
    })
    .await?;
    let mut payload = Payload::new();
    payload.insert("intent".into(), json!(reply.intent));
    payload.insert("version".into(), json!(reply.version));
    state.record(&session, EventType::ChatMessage, Some(&id), payload)?;
    Ok(Json(reply))
}

#[derive(Debug, Deserialize)]
struct LevelsQuery {
    subject: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LevelDescription {
    pub level: BackgroundLevel,
    pub label: String,
    pub description: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LevelsReply {
    pub subject: String,
    pub levels: Vec<LevelDescription>,
}

async fn levels(
    State(state): State<AppState>,
    SessionId(session): SessionId,
    ApiQuery(q): ApiQuery<LevelsQuery>,
) -> Result<Json<LevelsReply>, ApiError> {
    let st = state.clone();
    let subject = q.subject.trim().to_string();
    let s = subject.clone();
    let set = blocking(move || {
        let engine = st.engine();
        Ok(engine
            .pipeline
            .describe_background_levels(&s, &engine.provider)?)
    })
    .await?;
    let levels = BackgroundLevel::ALL
        .iter()
        .map(|l| LevelDescription {
            level: *l,
            label: l.label().to_string(),
            description: set.get(*l).unwrap_or_default().to_string(),
        })
        .collect();
    let mut payload = Payload::new();
    payload.insert("subject".into(), json!(subject));
    state.record(&session, EventType::ViewedLevelDescriptions, None, payload)?;
    Ok(Json(LevelsReply { subject, levels }))
}

#[derive(Debug, Deserialize)]
struct AlternativesQuery {
    week: u32,
    day: u32,
    #[serde(default)]
    limit: Option<usize>,
    /// Resource being swapped out; its time is freed for the candidates.
    #[serde(default)]
    resource: Option<String>,
    #[serde(default)]
    version: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AlternativesReply {
    pub plan_id: String,
    pub version: u64,
    pub week: u32,
    pub day: u32,
    pub topic: String,
    pub max_duration_seconds: u64,
    pub candidates: Vec<RankedCandidate>,
}

async fn alternatives(
    State(state): State<AppState>,
    SessionId(session): SessionId,
    ApiPath(id): ApiPath<String>,
    ApiQuery(q): ApiQuery<AlternativesQuery>,
) -> Result<Json<AlternativesReply>, ApiError> {
    let plan = state.plan_at(&id, q.version)?;
    let day = plan.day(q.week, q.day).ok_or_else(|| {
        ApiError::not_found(format!("plan `{id}` has no week {} day {}", q.week, q.day))
    })?;
    if let Some(r) = &q.resource {
        if !day.resources.iter().any(|x| &x.external_id == r) {
            return Err(ApiError::not_found(format!(
                "no resource `{r}` in week {} day {}",
                q.week, q.day
            )));
        }
    }
    let others: u64 = day
        .resources
        .iter()
        .filter(|x| q.resource.as_deref() != Some(x.external_id.as_str()))
        .map(|x| x.duration_seconds)
        .sum();
    let query = AlternativeQuery {
        topic: day.topic.clone(),
        background_level: plan.profile.background_level,
        max_duration_seconds: plan.profile.daily_budget_seconds().saturating_sub(others),
        limit: q.limit.unwrap_or(MAX_ALTERNATIVES),
    };
    let st = state.clone();
    let qq = query.clone();
    let candidates = blocking(move || Ok(search_alternatives(&qq, &st.engine().catalog)?)).await?;
    let mut payload = Payload::new();
    payload.insert("week".into(), json!(q.week));
    payload.insert("day".into(), json!(q.day));
    payload.insert("count".into(), json!(candidates.len()));
    state.record(&session, EventType::OpenedAlternatives, Some(&id), payload)?;
    Ok(Json(AlternativesReply {
        plan_id: id,
        version: plan.version,
        week: q.week,
        day: q.day,
        topic: query.topic,
        max_duration_seconds: query.max_duration_seconds,
        candidates,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplaceRequest {
    pub expected_version: u64,
    pub week: u32,
    pub day: u32,
    pub old_external_id: String,
    pub new_external_id: String,
}

async fn replace(
    State(state): State<AppState>,
    SessionId(session): SessionId,
    ApiPath(id): ApiPath<String>,
    JsonBody(req): JsonBody<ReplaceRequest>,
) -> Result<Response, ApiError> {
    let (head, plan) = state.head_plan(&id)?;
    check_expected(&id, req.expected_version, head)?;
    let st = state.clone();
    let r = req.clone();
    let doc = blocking(move || {
        let found = st
            .engine()
            .catalog
            .lookup(std::slice::from_ref(&r.new_external_id))
            .map_err(ResourceError::from)?;
        let record = found.into_iter().next().flatten().ok_or_else(|| {
            ApiError::bad_request(format!("catalog has no video `{}`", r.new_external_id))
        })?;
        let updated = replace_resource(&plan, r.week, r.day, &r.old_external_id, &record)?;
        let doc = serialize(&updated)?;
        st.store()
            .append(updated.plan_id.as_str(), head, updated.version, &doc, None)?;
        Ok(doc)
    })
    .await?;
    let mut payload = Payload::new();
    payload.insert("week".into(), json!(req.week));
    payload.insert("day".into(), json!(req.day));
    payload.insert("old_external_id".into(), json!(req.old_external_id));
    payload.insert("new_external_id".into(), json!(req.new_external_id));
    state.record(&session, EventType::SelectedAlternative, Some(&id), payload)?;
    Ok(document(StatusCode::OK, doc, vec![]))
}

#[derive(Debug, Deserialize)]
struct VersionQuery {
    #[serde(default)]
    version: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LintReply {
    pub plan_id: String,
    pub version: u64,
    pub report: PlanQualityReport,
}

async fn lint(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
    ApiQuery(q): ApiQuery<VersionQuery>,
) -> Result<Json<LintReply>, ApiError> {
    let plan = state.plan_at(&id, q.version)?;
    let report = lint_plan(&plan, &state.inner.lint).map_err(ApiError::invalid)?;
    Ok(Json(LintReply {
        plan_id: id,
        version: plan.version,
        report,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRequest {
    pub event_type: EventType,
    #[serde(default)]
    pub plan_id: Option<String>,
    #[serde(default)]
    pub payload: Payload,
}

async fn post_event(
    State(state): State<AppState>,
    SessionId(session): SessionId,
    JsonBody(req): JsonBody<EventRequest>,
) -> Result<(StatusCode, Json<InteractionEvent>), ApiError> {
    if !req.event_type.is_client_reported() {
        return Err(ApiError::bad_request(format!(
            "`{}` events are recorded by the server when it handles the request",
            json!(req.event_type).as_str().unwrap_or_default()
        )));
    }
    if let Some(p) = &req.plan_id {
        if state.store().head(p)?.is_none() {
            return Err(unknown_plan(p));
        }
    }
    let event = state.record(
        &session,
        req.event_type,
        req.plan_id.as_deref(),
        req.payload,
    )?;
    Ok((StatusCode::CREATED, Json(event)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
}

async fn create_session(
    State(state): State<AppState>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let now = state.engine().pipeline.now().to_rfc3339();
    loop {
        let n = state.inner.session_seq.fetch_add(1, Ordering::SeqCst);
        let id = format!("session-{}", fingerprint(&format!("{now}#{n}")));
        if state.store().add_session(&id, &now)? {
            return Ok((StatusCode::CREATED, Json(SessionCreated { session_id: id })));
        }
    }
}

async fn session_summary(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
) -> Result<Json<SessionSummary>, ApiError> {
    if !state.store().has_session(&id)? && !state.events().has_session(&id) {
        return Err(ApiError::not_found(format!("unknown session `{id}`")));
    }
    Ok(Json(SessionSummary::fold(&state.events().session(&id)?)))
}
