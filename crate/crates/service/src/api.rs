use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tutor_core::tutor::{give_feedback, Feedback};

use crate::config::Config;
use crate::session_log::{SessionLog, SessionRecord};
use crate::store::ExerciseStore;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<ExerciseStore>,
    pub config: Arc<Config>,
    pub permits: Arc<Semaphore>,
    pub log: Option<Arc<SessionLog>>,
}

impl AppState {
    pub fn new(store: ExerciseStore, config: Config, log: Option<SessionLog>) -> AppState {
        let permits = Arc::new(Semaphore::new(config.concurrency()));
        AppState { store: Arc::new(store), config: Arc::new(config), permits, log: log.map(Arc::new) }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/exercises", get(list_exercises))
        .route("/api/exercises/{id}", get(exercise))
        .route("/api/exercises/{id}/feedback", post(feedback))
        .with_state(state)
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(ErrorBody { error })).into_response()
    }
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    exercises: usize,
}

async fn health(State(st): State<AppState>) -> Json<Health> {
    Json(Health { status: "ok", exercises: st.store.len() })
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ExerciseSummary {
    pub id: String,
    pub description: String,
    pub signature: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ExerciseDetail {
    pub id: String,
    pub description: String,
    pub signature: String,
    pub prelude: Vec<String>,
    pub properties: Vec<String>,
    pub examples: usize,
}

async fn list_exercises(State(st): State<AppState>) -> Json<Vec<ExerciseSummary>> {
    Json(
        st.store
            .iter()
            .map(|e| ExerciseSummary {
                id: e.id.clone(),
                description: e.description.clone(),
                signature: e.signature_text.clone(),
            })
            .collect(),
    )
}

async fn exercise(State(st): State<AppState>, Path(id): Path<String>) -> Result<Json<ExerciseDetail>, ApiError> {
    let e = st.store.get(&id).ok_or_else(|| ApiError::NotFound(format!("no exercise `{id}`")))?;
    Ok(Json(ExerciseDetail {
        id: e.id.clone(),
        description: e.description.clone(),
        signature: e.signature_text.clone(),
        prelude: e.allowed.clone(),
        properties: e.property_names.clone(),
        examples: e.examples.len(),
    }))
}

#[derive(Debug, Deserialize)]
pub struct FeedbackRequest {
    pub source: String,
    /// Synthesis time budget for this request, capped by the server.
    #[serde(default)]
    pub budget_ms: Option<u64>,
}

async fn feedback(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<FeedbackRequest>, JsonRejection>,
) -> Result<Json<Feedback>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let ex = st.store.get(&id).ok_or_else(|| ApiError::NotFound(format!("no exercise `{id}`")))?;
    let opts = st.config.options(req.budget_ms);
    let permit = st.permits.clone().acquire_owned().await.map_err(|e| ApiError::Internal(e.to_string()))?;
    let start = Instant::now();
    let source = req.source;
    let (fb, source) = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        (give_feedback(&ex, &source, &opts), source)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))?;
    let latency_ms = start.elapsed().as_millis().try_into().unwrap_or(u64::MAX);
    if let Some(log) = &st.log {
        if let Err(e) = log.append(&SessionRecord::new(&id, &source, &fb, latency_ms)) {
            tracing::warn!("session log write failed: {e}");
        }
    }
    tracing::info!(exercise = %id, classification = ?fb.classification, latency_ms, "feedback");
    Ok(Json(fb))
}
