//! HTTP interface. Every handler is a thin wrapper over [`Engine`]; errors
//! come back as `{"error": ..., "kind": ...}` with a 4xx or 5xx status.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::engine::{Engine, EngineError};
use crate::scrdr::{KbError, RuleDraft};

pub struct ApiError(EngineError);

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        ApiError(e)
    }
}

fn kind_of(e: &EngineError) -> &'static str {
    match e {
        EngineError::Config(_) => "config",
        EngineError::Lexicon(_) => "lexicon",
        EngineError::Ontology(_) => "ontology",
        EngineError::Kb(KbError::Conflict { .. }) => "conflict",
        EngineError::Kb(KbError::Rejected(_)) => "rejected",
        EngineError::Kb(_) => "kb",
        EngineError::Analysis(_) => "analysis",
        EngineError::NoConclusion { .. } => "no-conclusion",
        EngineError::Mapping(_) => "mapping",
        EngineError::Answer(_) => "answer",
        EngineError::UnknownSession(_) => "unknown-session",
        EngineError::WrongChoice { .. } => "wrong-choice",
        EngineError::Corpus { .. } => "corpus",
        EngineError::Replay { .. } => "replay",
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            EngineError::UnknownSession(_) => StatusCode::NOT_FOUND,
            EngineError::Kb(KbError::Conflict { .. } | KbError::SlotOccupied(_) | KbError::IdInUse(_)) => {
                StatusCode::CONFLICT
            }
            EngineError::NoConclusion { .. } | EngineError::Mapping(_) | EngineError::Answer(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            e if e.is_input_error() => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({ "error": self.0.to_string(), "kind": kind_of(&self.0) });
        (status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<serde_json::Value>, ApiError>;

fn to_json<T: serde::Serialize>(value: &T) -> Json<serde_json::Value> {
    Json(serde_json::to_value(value).expect("response types serialize"))
}

#[derive(Debug, Deserialize)]
pub struct QuestionRequest {
    pub question: String,
    #[serde(default)]
    pub pretagged: Option<bool>,
}

#[derive(Debug, Deserialize)]
pub struct ChoiceRequest {
    pub choice_id: String,
    pub selection: String,
}

#[derive(Debug, Deserialize)]
pub struct ExceptionRequest {
    pub question: String,
    #[serde(default)]
    pub pretagged: Option<bool>,
    #[serde(default)]
    pub dry_run: bool,
    #[serde(flatten)]
    pub draft: RuleDraft,
}

async fn analyze(State(engine): State<Arc<Engine>>, Json(req): Json<QuestionRequest>) -> ApiResult {
    Ok(to_json(&engine.analyze(&req.question, req.pretagged)?))
}

async fn answer(State(engine): State<Arc<Engine>>, Json(req): Json<QuestionRequest>) -> ApiResult {
    Ok(to_json(&engine.answer(&req.question, req.pretagged)?))
}

async fn choose(
    State(engine): State<Arc<Engine>>,
    Path(session): Path<String>,
    Json(req): Json<ChoiceRequest>,
) -> ApiResult {
    Ok(to_json(&engine.choose(&session, &req.choice_id, &req.selection)?))
}

async fn kb(State(engine): State<Arc<Engine>>) -> ApiResult {
    Ok(Json(engine.knowledge_base().to_json()))
}

async fn kb_path(State(engine): State<Arc<Engine>>, Query(req): Query<QuestionRequest>) -> ApiResult {
    let analyzed = engine.analyze(&req.question, req.pretagged)?;
    Ok(to_json(&analyzed.evaluation))
}

async fn kb_exception(State(engine): State<Arc<Engine>>, Json(req): Json<ExceptionRequest>) -> ApiResult {
    let insertion = engine.add_rule(&req.question, req.pretagged, &req.draft, req.dry_run)?;
    let mut body = to_json(&insertion).0;
    body["dry_run"] = json!(req.dry_run);
    Ok(Json(body))
}

async fn kb_stats(State(engine): State<Arc<Engine>>) -> ApiResult {
    Ok(to_json(&engine.kb_stats()))
}

async fn ontology_summary(State(engine): State<Arc<Engine>>) -> ApiResult {
    Ok(to_json(&engine.ontology_summary()))
}

async fn health(State(engine): State<Arc<Engine>>) -> ApiResult {
    Ok(Json(json!({ "status": "ok", "language": engine.language().code() })))
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/analyze", post(analyze))
        .route("/answer", post(answer))
        .route("/answer/{session}/choice", post(choose))
        .route("/kb", get(kb))
        .route("/kb/path", get(kb_path))
        .route("/kb/exception", post(kb_exception))
        .route("/kb/stats", get(kb_stats))
        .route("/ontology/summary", get(ontology_summary))
        .with_state(engine)
}

pub async fn serve(engine: Arc<Engine>, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(engine)).await
}
