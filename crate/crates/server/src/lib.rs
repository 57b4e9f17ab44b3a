//! HTTP/JSON service: dataset upload, selection updates, rollback and views.
//!
//! Requests for different sessions run in parallel. Requests for the same
//! session are serialized on that session's lock, and the heavy statistics
//! work runs on the blocking pool.

mod api;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::Router;
use levelscope_core::{EncodedDataset, SamplingConfig, Session};
use tokio::net::TcpListener;

pub use api::{router, ApiError};
pub use store::SessionStore;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub port: u16,
    pub session_ttl: Duration,
    pub sampling: SamplingConfig,
    /// Largest accepted upload, in bytes.
    pub max_upload_bytes: usize,
    /// Directory of static UI assets served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            port: 8080,
            session_ttl: Duration::from_secs(3600),
            sampling: SamplingConfig::default(),
            max_upload_bytes: 512 * 1024 * 1024,
            static_dir: None,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub(crate) config: Arc<ServerConfig>,
    pub(crate) sessions: SessionStore,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        let sessions = SessionStore::new(config.session_ttl);
        Self {
            config: Arc::new(config),
            sessions,
        }
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.sessions
    }

    /// Registers a session for an already loaded dataset and returns its id.
    pub fn create_session(&self, dataset: EncodedDataset, sampling: &SamplingConfig) -> (String, Session) {
        let session = Session::new(Arc::new(dataset), sampling);
        let id = self.sessions.insert(session.clone());
        (id, session)
    }
}

/// Binds `addr` and serves until the process receives Ctrl-C.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    serve_on(listener, state).await
}

/// Serves on an already bound listener. Also runs the idle-session sweeper.
pub async fn serve_on(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    let sweeper = state.sessions.clone().spawn_sweeper();
    let app: Router = router(state);
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let result = axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    sweeper.abort();
    result
}
