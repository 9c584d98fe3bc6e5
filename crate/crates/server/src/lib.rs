//! HTTP API over sessions held in memory and addressed by id.
//!
//! Each session sits behind its own read-write lock: a command takes the
//! write lock for its whole execution, so readers see either the state before
//! it or after it. Every response body is JSON except the BSX download;
//! errors are `{"code": ..., "message": ...}`.

mod api;
mod error;
mod upload;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, post, put};
use axum::Router;
use parking_lot::RwLock;
use trackx_core::Session;

pub use crate::error::{ApiError, ErrorBody};

pub type SharedSession = Arc<RwLock<Session>>;

/// Uploads carry whole sessions.
const MAX_UPLOAD_BYTES: usize = 1 << 30;

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, SharedSession>>,
}

impl AppState {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    /// Registers a session and returns its new id.
    pub fn insert(&self, session: Session) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        self.insert_with_id(id.clone(), session);
        id
    }

    pub fn insert_with_id(&self, id: String, session: Session) {
        self.sessions
            .write()
            .insert(id, Arc::new(RwLock::new(session)));
    }

    pub fn get(&self, id: &str) -> Option<SharedSession> {
        self.sessions.read().get(id).cloned()
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().keys().cloned().collect();
        ids.sort();
        ids
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route(
            "/sessions",
            get(api::list_sessions).post(upload::create_session),
        )
        .route("/sessions/{id}", get(api::session_summary))
        .route("/sessions/{id}/bsx", get(api::download_bsx))
        .route("/sessions/{id}/tracks", get(api::list_tracks))
        .route("/sessions/{id}/tracks/{tid}/events", get(api::track_events))
        .route("/sessions/{id}/tracks/{tid}/render", get(api::render))
        .route(
            "/sessions/{id}/tracks/{tid}/threshold",
            post(api::set_threshold),
        )
        .route("/sessions/{id}/command", post(api::command))
        .route("/sessions/{id}/autocomplete", get(api::autocomplete))
        .route("/sessions/{id}/cursor", put(api::set_cursor))
        .route("/sessions/{id}/order", post(api::set_order))
        .route("/sessions/{id}/metrics/roc", get(api::roc))
        .route("/sessions/{id}/metrics/report", get(api::report))
        .route("/sessions/{id}/playlist", get(api::playlist))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

/// Serves the API until the process is stopped.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
