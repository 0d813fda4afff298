use std::collections::{BTreeMap, HashMap};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use flowlenia::explorer::{execute_plan, plan_human_job};
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc::error::TrySendError;

use crate::routes::read;
use crate::{ApiError, AppState};

fn default_multiplier() -> f64 {
    1.0
}

/// A request to mutate a chosen discovery.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobRequest {
    pub parent: u64,
    #[serde(default = "default_multiplier")]
    pub multiplier: f64,
    /// Search-space dimensions pinned to explicit values after mutation.
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JobStatus {
    pub id: u64,
    pub state: JobState,
    pub request: JobRequest,
    /// Id of the appended discovery once done.
    pub discovery: Option<u64>,
    pub error: Option<String>,
}

#[derive(Default)]
pub(crate) struct JobTable {
    next: u64,
    jobs: HashMap<u64, JobStatus>,
}

fn table(state: &AppState) -> std::sync::MutexGuard<'_, JobTable> {
    state.jobs.lock().unwrap_or_else(|e| e.into_inner())
}

pub async fn enqueue(
    State(state): State<AppState>,
    Json(req): Json<JobRequest>,
) -> Result<(StatusCode, Json<JobStatus>), ApiError> {
    if !(req.multiplier > 0.0 && req.multiplier.is_finite()) {
        return Err(ApiError::bad_request(format!("multiplier must be positive, got {}", req.multiplier)));
    }
    {
        let archive = read(&state);
        if archive.get(req.parent).is_none() {
            return Err(ApiError::bad_request(format!("unknown parent discovery {}", req.parent)));
        }
        let space = archive.meta().campaign.search_space()?;
        if let Some(name) = req.overrides.keys().find(|n| space.index_of(n).is_none()) {
            return Err(ApiError::bad_request(format!("unknown parameter {name:?}")));
        }
    }
    let status = {
        let mut t = table(&state);
        let id = t.next;
        let status = JobStatus { id, state: JobState::Queued, request: req, discovery: None, error: None };
        match state.queue.try_send(id) {
            Ok(()) => {}
            Err(TrySendError::Full(_)) => {
                return Err(ApiError {
                    status: StatusCode::SERVICE_UNAVAILABLE,
                    message: "job queue is full; retry later".into(),
                })
            }
            Err(TrySendError::Closed(_)) => return Err(ApiError::internal("job executor has stopped")),
        }
        t.next += 1;
        t.jobs.insert(id, status.clone());
        status
    };
    Ok((StatusCode::ACCEPTED, Json(status)))
}

pub async fn status(State(state): State<AppState>, Path(raw): Path<String>) -> Result<Json<JobStatus>, ApiError> {
    let id: u64 = raw.parse().map_err(|_| ApiError::bad_request(format!("invalid job id {raw:?}")))?;
    table(&state).jobs.get(&id).cloned().map(Json).ok_or_else(|| ApiError::not_found(format!("no job {id}")))
}

fn update(state: &AppState, id: u64, f: impl FnOnce(&mut JobStatus)) {
    if let Some(job) = table(state).jobs.get_mut(&id) {
        f(job);
    }
}

/// Drains the queue one job at a time; this task is the archive's only writer.
pub(crate) async fn executor(state: AppState, mut rx: tokio::sync::mpsc::Receiver<u64>) {
    while let Some(id) = rx.recv().await {
        let Some(req) = table(&state).jobs.get(&id).map(|j| j.request.clone()) else {
            continue;
        };
        update(&state, id, |j| j.state = JobState::Running);
        let worker = state.clone();
        let outcome = tokio::task::spawn_blocking(move || run_job(&worker, &req)).await;
        let outcome = outcome.unwrap_or_else(|e| Err(format!("job panicked: {e}")));
        update(&state, id, |j| match outcome {
            Ok(d) => {
                j.state = JobState::Done;
                j.discovery = Some(d);
            }
            Err(e) => {
                j.state = JobState::Failed;
                j.error = Some(e);
            }
        });
    }
}

fn run_job(state: &AppState, req: &JobRequest) -> Result<u64, String> {
    let overrides: Vec<(String, f64)> = req.overrides.iter().map(|(k, v)| (k.clone(), *v)).collect();
    // plan under the read lock, simulate without any lock, append under the write lock
    let (campaign, plan, dir) = {
        let archive = read(state);
        let campaign = archive.meta().campaign.clone();
        let space = campaign.search_space().map_err(|e| e.to_string())?;
        let plan = plan_human_job(&campaign, &space, archive.discoveries(), req.parent, req.multiplier, &overrides)
            .map_err(|e| e.to_string())?;
        (campaign, plan, archive.dir().to_path_buf())
    };
    let space = campaign.search_space().map_err(|e| e.to_string())?;
    let discovery = execute_plan(&campaign, &space, plan, Some(&dir)).map_err(|e| e.to_string())?;
    let id = discovery.id;
    let mut archive = state.archive.write().unwrap_or_else(|e| e.into_inner());
    archive.append(discovery).map_err(|e| e.to_string())?;
    Ok(id)
}
