//! Read-mostly HTTP API over a discovery archive.
//!
//! Readers share the archive through a read-write lock. Human-seeded jobs
//! go through a bounded queue drained by a single executor, which is the
//! only writer.

use std::sync::{Arc, Mutex, RwLock};

use axum::routing::{get, post};
use axum::Router;
use flowlenia::archive::ArchiveIndex;
use tokio::net::TcpListener;

mod error;
mod jobs;
mod range;
mod routes;

pub use error::ApiError;
pub use jobs::{JobRequest, JobState, JobStatus};
pub use range::{parse_range, ByteRange};

/// Shared server state.
#[derive(Clone)]
pub struct AppState {
    pub archive: Arc<RwLock<ArchiveIndex>>,
    jobs: Arc<Mutex<jobs::JobTable>>,
    queue: tokio::sync::mpsc::Sender<u64>,
}

/// Builds the router and spawns the job executor on the current runtime.
pub fn app(archive: ArchiveIndex, queue_capacity: usize) -> Router {
    let (tx, rx) = tokio::sync::mpsc::channel(queue_capacity.max(1));
    let state = AppState {
        archive: Arc::new(RwLock::new(archive)),
        jobs: Arc::new(Mutex::new(jobs::JobTable::default())),
        queue: tx,
    };
    tokio::spawn(jobs::executor(state.clone(), rx));
    router(state)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/discoveries", get(routes::list_discoveries))
        .route("/api/discoveries/{id}", get(routes::get_discovery))
        .route("/api/discoveries/{id}/video", get(routes::get_video))
        .route("/api/discoveries/{id}/thumbnail", get(routes::get_thumbnail))
        .route("/api/metrics/summary", get(routes::summary))
        .route("/api/jobs", post(jobs::enqueue))
        .route("/api/jobs/{id}", get(jobs::status))
        .with_state(state)
}

/// Serves `archive` on `listener` until the process is interrupted.
pub async fn serve(listener: TcpListener, archive: ArchiveIndex, queue_capacity: usize) -> std::io::Result<()> {
    let app = app(archive, queue_capacity);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
