use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::net::TcpListener;

use crate::api::{self, ApiError, AppState, SearchRequest};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body())).into_response()
    }
}

fn bad_request(message: String) -> ApiError {
    ApiError {
        status: 400,
        code: "bad_request",
        message,
    }
}

async fn search(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SearchRequest>, JsonRejection>,
) -> Result<Json<api::SearchResponse>, ApiError> {
    let Json(req) = body.map_err(|e| bad_request(e.body_text()))?;
    tokio::task::spawn_blocking(move || api::handle_search(&state, &req))
        .await
        .map_err(|e| ApiError {
            status: 500,
            code: "internal",
            message: e.to_string(),
        })?
        .map(Json)
}

async fn verse(
    State(state): State<Arc<AppState>>,
    Path((surah, ayah)): Path<(String, String)>,
) -> Result<Json<api::VerseBody>, ApiError> {
    let s = surah.parse::<i64>().unwrap_or(-1);
    let a = ayah.parse::<i64>().unwrap_or(-1);
    api::handle_verse_lookup(&state, s, a).map(Json)
}

async fn info(State(state): State<Arc<AppState>>) -> Result<Json<api::CorpusInfo>, ApiError> {
    api::handle_corpus_info(&state).map(Json)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/search", post(search))
        .route("/api/verse/{surah}/{ayah}", get(verse))
        .route("/api/info", get(info))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let addr: SocketAddr = listener.local_addr()?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
