//! HTTP routes for [`SessionStore`].
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/plans` | |
//! | POST | `/sessions` | `{"plan_id": ...}` |
//! | GET | `/sessions/{id}` | |
//! | POST | `/sessions/{id}/events` | `{"kind": ..., "outcome": ...}` |
//! | GET | `/sessions/{id}/transcript` | |
//!
//! Errors come back as `{"error": message}` with 404 for unknown ids, 409
//! for events the session cannot accept and 422 for malformed bodies.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::session::{EventBody, SessionError, SessionStore};

#[derive(Debug, Deserialize)]
struct CreateBody {
    plan_id: String,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::UnknownPlan(_) | SessionError::UnknownSession(_) => StatusCode::NOT_FOUND,
            SessionError::Rejected(_) => StatusCode::CONFLICT,
            SessionError::Unplayable(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.body_text())
    }
}

type Shared = Arc<SessionStore>;

pub fn router(store: Shared) -> Router {
    Router::new()
        .route("/plans", get(list_plans))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/events", post(post_event))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .with_state(store)
}

async fn list_plans(State(store): State<Shared>) -> Response {
    Json(json!({ "plans": store.plans() })).into_response()
}

async fn create_session(
    State(store): State<Shared>,
    body: Result<Json<CreateBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let view = store.create(&body.plan_id)?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(State(store): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(store.view(&id)?).into_response())
}

async fn post_event(
    State(store): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<EventBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    Ok(Json(store.apply(&id, body)?).into_response())
}

async fn get_transcript(State(store): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(store.transcript(&id)?).into_response())
}

/// Serves until the process is stopped.
pub async fn serve(store: SessionStore, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(store))).await
}
