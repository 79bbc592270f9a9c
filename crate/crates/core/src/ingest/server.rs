use super::{handle_batch, AppendLog, IngestError, LogWriter, ProtocolError, DEFAULT_MAX_BATCH};
use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use tokio::net::TcpListener;

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub listen: SocketAddr,
    pub log_path: PathBuf,
    pub max_batch: usize,
    /// Request bodies above this size are refused before parsing.
    pub max_body_bytes: usize,
    pub fsync: bool,
}

impl IngestConfig {
    pub fn new(listen: SocketAddr, log_path: impl Into<PathBuf>) -> Self {
        IngestConfig {
            listen,
            log_path: log_path.into(),
            max_batch: DEFAULT_MAX_BATCH,
            max_body_bytes: 64 << 20,
            fsync: false,
        }
    }
}

#[derive(Clone)]
pub struct IngestState {
    writer: LogWriter,
    max_batch: usize,
}

impl IngestState {
    pub fn new(writer: LogWriter, max_batch: usize) -> Self {
        IngestState { writer, max_batch }
    }

    pub fn open(config: &IngestConfig) -> std::io::Result<Self> {
        let log = AppendLog::open(&config.log_path)?.with_sync(config.fsync);
        Ok(IngestState::new(LogWriter::spawn(log), config.max_batch))
    }
}

impl IntoResponse for IngestError {
    fn into_response(self) -> Response {
        let status = match &self {
            IngestError::Protocol(ProtocolError::TooLarge { .. }) => StatusCode::PAYLOAD_TOO_LARGE,
            IngestError::Protocol(_) => StatusCode::BAD_REQUEST,
            IngestError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

async fn post_ticks(State(state): State<Arc<IngestState>>, body: Bytes) -> Response {
    match handle_batch(&state.writer, &body, state.max_batch).await {
        Ok(ack) => {
            tracing::debug!(accepted = ack.accepted, rejected = ack.rejected, "batch stored");
            Json(ack).into_response()
        }
        Err(e) => {
            tracing::warn!(error = %e, "batch refused");
            e.into_response()
        }
    }
}

async fn healthz() -> &'static str {
    "ok"
}

pub fn router(state: IngestState, max_body_bytes: usize) -> Router {
    Router::new()
        .route("/ticks", post(post_ticks))
        .route("/healthz", get(healthz))
        .layer(DefaultBodyLimit::max(max_body_bytes))
        .with_state(Arc::new(state))
}

/// Serves the ingest endpoints on an already bound listener until `shutdown`
/// resolves.
pub async fn serve(
    listener: TcpListener,
    config: &IngestConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let state = IngestState::open(config)?;
    tracing::info!(
        addr = %listener.local_addr()?,
        log = %config.log_path.display(),
        max_batch = config.max_batch,
        "ingest server listening"
    );
    axum::serve(listener, router(state, config.max_body_bytes))
        .with_graceful_shutdown(shutdown)
        .await
}
