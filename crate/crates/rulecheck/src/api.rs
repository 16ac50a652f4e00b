//! Survey and report service.
//!
//! | route | auth | success |
//! |---|---|---|
//! | `POST /session` | none | 201 `{token, consented_at, cursor}` |
//! | `GET /survey/next` | respondent bearer | 200 `{done, index, total, question?}` |
//! | `POST /survey/response` | respondent bearer | 201 `{cursor, done}` |
//! | `GET /reports/{analytics,survey}` | operator bearer | 200 report JSON |

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use rulecheck_core::survey::{survey_report, AnswerKey, QuestionView, RecordError, ResponseLog, ResponseSubmission, SurveyResponse};

use crate::error::{Error, Result};
use crate::jsonl::{append_jsonl, read_jsonl_or_empty, write_json};
use crate::pipeline::files;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionToken {
    pub token: String,
    pub consented_at: DateTime<Utc>,
    pub cursor: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionRecord {
    token: String,
    consented_at: DateTime<Utc>,
}

struct Live {
    log: ResponseLog,
    sessions: HashMap<String, DateTime<Utc>>,
}

/// Shared service state. Responses and sessions are persisted as they
/// arrive and replayed on start.
pub struct SurveyService {
    questions: Vec<QuestionView>,
    key: AnswerKey,
    models: Option<Vec<String>>,
    data_dir: PathBuf,
    operator_token: Option<String>,
    live: Mutex<Live>,
}

const SESSIONS: &str = "sessions.jsonl";

impl SurveyService {
    pub fn open(
        data_dir: &Path,
        questions: Vec<QuestionView>,
        key: AnswerKey,
        models: Option<Vec<String>>,
        operator_token: Option<String>,
    ) -> Result<Self> {
        let responses: Vec<SurveyResponse> = read_jsonl_or_empty(&data_dir.join(files::RESPONSES))?;
        let sessions: Vec<SessionRecord> = read_jsonl_or_empty(&data_dir.join(SESSIONS))?;
        let log = ResponseLog::replay(&questions, responses)
            .map_err(|e| Error::stage("serve", format!("response log does not replay: {e}")))?;
        let mut known: HashMap<String, DateTime<Utc>> =
            sessions.into_iter().map(|s| (s.token, s.consented_at)).collect();
        for r in log.responses() {
            known.entry(r.respondent_id.clone()).or_insert(r.submitted_at);
        }
        Ok(Self {
            questions,
            key,
            models,
            data_dir: data_dir.to_path_buf(),
            operator_token: operator_token.filter(|t| !t.is_empty()),
            live: Mutex::new(Live { log, sessions: known }),
        })
    }

    pub fn question_count(&self) -> usize {
        self.questions.len()
    }

    pub fn responses(&self) -> Vec<SurveyResponse> {
        self.live.lock().unwrap().log.responses().to_vec()
    }
}

fn error(status: StatusCode, kind: &str, message: impl ToString) -> Response {
    (status, Json(json!({ "error": kind, "message": message.to_string() }))).into_response()
}

fn internal(e: impl ToString) -> Response {
    tracing::error!(error = %e.to_string(), "request failed");
    error(StatusCode::INTERNAL_SERVER_ERROR, "internal", "the server could not store the request")
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
        .filter(|t| !t.is_empty())
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

#[allow(clippy::result_large_err)]
fn respondent(service: &SurveyService, headers: &HeaderMap) -> std::result::Result<String, Response> {
    let unauthorized = || error(StatusCode::UNAUTHORIZED, "unauthorized", "missing or unknown session token");
    let token = bearer(headers).ok_or_else(unauthorized)?;
    if service.live.lock().unwrap().sessions.contains_key(token) {
        Ok(token.to_string())
    } else {
        Err(unauthorized())
    }
}

async fn create_session(State(service): State<Arc<SurveyService>>, body: Bytes) -> Response {
    let consent = serde_json::from_slice::<Value>(&body)
        .ok()
        .and_then(|v| v.get("consent").and_then(Value::as_bool));
    if consent != Some(true) {
        return error(StatusCode::BAD_REQUEST, "consent_required", "the request body must be {\"consent\": true}");
    }
    let token = hex::encode(rand::rng().random::<[u8; 16]>());
    let consented_at = Utc::now();
    let mut live = service.live.lock().unwrap();
    let record = SessionRecord { token: token.clone(), consented_at };
    if let Err(e) = append_jsonl(&service.data_dir.join(SESSIONS), [&record]) {
        return internal(e);
    }
    live.sessions.insert(token.clone(), consented_at);
    (StatusCode::CREATED, Json(SessionToken { token, consented_at, cursor: 0 })).into_response()
}

async fn next_question(State(service): State<Arc<SurveyService>>, headers: HeaderMap) -> Response {
    let token = match respondent(&service, &headers) {
        Ok(t) => t,
        Err(r) => return r,
    };
    let index = service.live.lock().unwrap().log.cursor(&token);
    let total = service.questions.len();
    match service.questions.get(index) {
        Some(q) => Json(json!({ "done": false, "index": index, "total": total, "question": q })).into_response(),
        None => Json(json!({ "done": true, "index": total, "total": total })).into_response(),
    }
}

async fn submit_response(State(service): State<Arc<SurveyService>>, headers: HeaderMap, body: Bytes) -> Response {
    let token = match respondent(&service, &headers) {
        Ok(t) => t,
        Err(r) => return r,
    };
    let value: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, "malformed_json", e),
    };
    let submission: ResponseSubmission = match serde_json::from_value(value) {
        Ok(s) => s,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, "validation", e),
    };
    let response = match submission.into_response(token, Utc::now()) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, "validation", e),
    };
    let mut live = service.live.lock().unwrap();
    let mut candidate = live.log.clone();
    let cursor = match candidate.record(response.clone()) {
        Ok(c) => c,
        Err(e @ RecordError::UnknownQuestion(_)) => return error(StatusCode::CONFLICT, "sequencing", e),
        Err(e) if e.is_sequencing() => return error(StatusCode::CONFLICT, "sequencing", e),
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, "validation", e),
    };
    if let Err(e) = append_jsonl(&service.data_dir.join(files::RESPONSES), [&response]) {
        return internal(e);
    }
    live.log = candidate;
    let report = survey_report(live.log.responses(), &service.key, service.models.as_deref());
    if let Err(e) = write_json(&service.data_dir.join(files::SURVEY_REPORT), &report) {
        tracing::warn!(error = %e, "survey report not refreshed");
    }
    let done = cursor >= service.questions.len();
    (StatusCode::CREATED, Json(json!({ "cursor": cursor, "done": done }))).into_response()
}

async fn report(State(service): State<Arc<SurveyService>>, headers: HeaderMap, UrlPath(kind): UrlPath<String>) -> Response {
    let authorized = match (&service.operator_token, bearer(&headers)) {
        (Some(expected), Some(given)) => constant_time_eq(expected.as_bytes(), given.as_bytes()),
        _ => false,
    };
    if !authorized {
        return error(StatusCode::UNAUTHORIZED, "unauthorized", "operator token required");
    }
    let file = match kind.as_str() {
        "analytics" => files::ANALYTICS_REPORT,
        "survey" => files::SURVEY_REPORT,
        _ => return error(StatusCode::NOT_FOUND, "not_found", format!("no report named {kind}")),
    };
    match std::fs::read(service.data_dir.join(file)) {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            error(StatusCode::NOT_FOUND, "not_found", format!("{file} has not been generated yet"))
        }
        Err(e) => internal(e),
    }
}

pub fn router(service: Arc<SurveyService>, cors_origins: &[String]) -> Router {
    let origins: Vec<HeaderValue> = cors_origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::list(origins))
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::AUTHORIZATION, header::CONTENT_TYPE]);
    Router::new()
        .route("/session", post(create_session))
        .route("/survey/next", get(next_question))
        .route("/survey/response", post(submit_response))
        .route("/reports/{kind}", get(report))
        .layer(cors)
        .with_state(service)
}

/// Serves `router` on a background thread with its own runtime and returns
/// the bound address.
pub fn spawn(router: Router, addr: SocketAddr) -> std::io::Result<SocketAddr> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().expect("runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
            if let Err(e) = axum::serve(listener, router).await {
                tracing::error!(error = %e, "server stopped");
            }
        });
    });
    Ok(local)
}

/// Serves until the process is interrupted.
pub fn serve_forever(router: Router, addr: SocketAddr) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::stage("serve", e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::stage("serve", e))?;
        tracing::info!(%addr, "listening");
        axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Error::stage("serve", e))
    })
}
