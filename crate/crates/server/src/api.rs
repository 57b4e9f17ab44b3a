use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use levelscope_core::wire::{ErrorBody, RollbackRequest, SessionList, UploadResponse};
use levelscope_core::{load_dataset, LoadOptions, SamplingConfig, SelectionState, Session, TriView};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

use crate::AppState;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown session '{0}'")]
    UnknownSession(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<levelscope_core::Error> for ApiError {
    fn from(e: levelscope_core::Error) -> Self {
        ApiError::BadRequest(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    let limit = state.config.max_upload_bytes;
    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/api/dataset", post(upload_dataset))
        .route("/api/sessions", get(list_sessions))
        .route("/api/session/{id}/view", get(get_view))
        .route("/api/session/{id}/selection", post(update_selection))
        .route("/api/session/{id}/rollback", post(rollback_stage))
        .layer(DefaultBodyLimit::max(limit))
        .layer(TraceLayer::new_for_http())
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

#[derive(Debug, Deserialize)]
struct UploadParams {
    target: String,
    seed: Option<u64>,
    delimiter: Option<char>,
    units: Option<String>,
    no_sample_threshold: Option<usize>,
    p_target: Option<f64>,
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid JSON body: {e}")))
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn upload_dataset(
    State(state): State<AppState>,
    Query(params): Query<UploadParams>,
    body: Bytes,
) -> Result<Json<UploadResponse>, ApiError> {
    let defaults = state.config.sampling;
    let sampling = SamplingConfig {
        seed: params.seed.unwrap_or(defaults.seed),
        no_sample_threshold: params.no_sample_threshold.unwrap_or(defaults.no_sample_threshold),
        p_target: params.p_target.unwrap_or(defaults.p_target),
    };
    let opts = LoadOptions {
        target_column: params.target,
        delimiter: params.delimiter.unwrap_or(','),
        level_order: None,
        target_units: params.units,
    };
    let response = blocking(move || {
        let dataset = load_dataset(&body, &opts)?;
        let (session_id, session) = state.create_session(dataset, &sampling);
        let sample = session.sample_report();
        tracing::info!(
            session = %session_id,
            records = session.dataset().len(),
            fraction = sample.fraction,
            p_value = sample.p_value,
            "dataset loaded"
        );
        Ok(UploadResponse {
            session_id,
            records: session.dataset().len(),
            schema: session.schema().clone(),
            sample_fraction: sample.fraction,
            p_value: sample.p_value,
            sample,
        })
    })
    .await?;
    Ok(Json(response))
}

async fn list_sessions(State(state): State<AppState>) -> Json<SessionList> {
    Json(SessionList {
        sessions: state.sessions.ids(),
    })
}

/// Runs `f` under the session's lock on the blocking pool.
async fn with_session<F>(state: &AppState, id: String, f: F) -> Result<Json<TriView>, ApiError>
where
    F: FnOnce(&mut Session) -> levelscope_core::Result<TriView> + Send + 'static,
{
    let session = state
        .sessions
        .get(&id)
        .ok_or(ApiError::UnknownSession(id))?;
    let mut guard = session.lock_owned().await;
    let view = blocking(move || Ok(f(&mut guard)?)).await?;
    Ok(Json(view))
}

async fn get_view(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<TriView>, ApiError> {
    with_session(&state, id, |s| s.view()).await
}

async fn update_selection(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<TriView>, ApiError> {
    let sel: SelectionState = parse_json(&body)?;
    with_session(&state, id, move |s| s.update_selection(&sel)).await
}

async fn rollback_stage(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<TriView>, ApiError> {
    let req: RollbackRequest = parse_json(&body)?;
    with_session(&state, id, move |s| s.rollback(req.stage)).await
}
