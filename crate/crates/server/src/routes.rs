use std::collections::{BTreeMap, HashMap};

use axum::body::Body;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use flowlenia::archive::{avg_pairwise_distance, bin_coverage, ArchiveIndex, Branch, Discovery, Normalizer, DEFAULT_BINS};
use flowlenia::engine::Snapshot;
use flowlenia::metrics::render_frame;
use serde::Serialize;

use crate::range::parse_range;
use crate::{ApiError, AppState};

const DEFAULT_PAGE: usize = 100;
const MAX_PAGE: usize = 1000;

pub(crate) fn read(state: &AppState) -> std::sync::RwLockReadGuard<'_, ArchiveIndex> {
    // a panicked writer leaves only fully appended records behind
    state.archive.read().unwrap_or_else(|e| e.into_inner())
}

#[derive(Serialize)]
pub struct DiscoverySummary {
    pub id: u64,
    pub parent: Option<u64>,
    pub branch: Branch,
    pub goal: Option<Vec<f64>>,
    pub failed: bool,
    pub thumbnail: Option<String>,
}

fn summarize(d: &Discovery) -> DiscoverySummary {
    DiscoverySummary {
        id: d.id,
        parent: d.parent,
        branch: d.branch,
        goal: d.goal.clone(),
        failed: !d.succeeded(),
        thumbnail: d.artifacts.snapshot.as_ref().map(|_| format!("/api/discoveries/{}/thumbnail", d.id)),
    }
}

#[derive(Serialize)]
pub struct Page {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub goal_names: Vec<String>,
    pub items: Vec<DiscoverySummary>,
}

struct Filter {
    branch: Option<Branch>,
    failed: Option<bool>,
    /// `(dimension, lo, hi)`; either bound may be infinite.
    bounds: Vec<(usize, f64, f64)>,
}

impl Filter {
    fn parse(query: &HashMap<String, String>, names: &[String]) -> Result<(Self, usize, usize), ApiError> {
        let mut filter = Filter { branch: None, failed: None, bounds: Vec::new() };
        let (mut offset, mut limit) = (0, DEFAULT_PAGE);
        let number = |k: &str, v: &str| -> Result<f64, ApiError> {
            v.parse::<f64>()
                .ok()
                .filter(|x| !x.is_nan())
                .ok_or_else(|| ApiError::bad_request(format!("{k} must be a number, got {v:?}")))
        };
        let mut keys: Vec<&String> = query.keys().collect();
        keys.sort();
        for key in keys {
            let value = &query[key];
            match key.as_str() {
                "offset" => offset = value.parse().map_err(|_| ApiError::bad_request("offset must be an integer"))?,
                "limit" => {
                    limit = value.parse().map_err(|_| ApiError::bad_request("limit must be an integer"))?;
                    limit = limit.min(MAX_PAGE);
                }
                "branch" => {
                    let b = serde_json::from_value(serde_json::Value::String(value.clone()))
                        .map_err(|_| ApiError::bad_request(format!("unknown branch {value:?}")))?;
                    filter.branch = Some(b);
                }
                "failed" => {
                    filter.failed = Some(value.parse().map_err(|_| ApiError::bad_request("failed must be true or false"))?)
                }
                k => {
                    let (bound, name) = if let Some(n) = k.strip_prefix("min_") {
                        (true, n)
                    } else if let Some(n) = k.strip_prefix("max_") {
                        (false, n)
                    } else {
                        return Err(ApiError::bad_request(format!("unknown filter {k:?}")));
                    };
                    let dim = names
                        .iter()
                        .position(|n| n == name)
                        .ok_or_else(|| ApiError::bad_request(format!("unknown goal dimension {name:?}")))?;
                    let x = number(k, value)?;
                    filter.bounds.push(if bound { (dim, x, f64::INFINITY) } else { (dim, f64::NEG_INFINITY, x) });
                }
            }
        }
        Ok((filter, offset, limit))
    }

    fn accepts(&self, d: &Discovery) -> bool {
        if self.branch.is_some_and(|b| b != d.branch) {
            return false;
        }
        if self.failed.is_some_and(|f| f == d.succeeded()) {
            return false;
        }
        if self.bounds.is_empty() {
            return true;
        }
        match &d.goal {
            Some(g) => self.bounds.iter().all(|&(i, lo, hi)| g[i] >= lo && g[i] <= hi),
            None => false,
        }
    }
}

pub async fn list_discoveries(
    State(state): State<AppState>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Json<Page>, ApiError> {
    let archive = read(&state);
    let names = archive.meta().goal_names.clone();
    let (filter, offset, limit) = Filter::parse(&query, &names)?;
    let matching: Vec<&Discovery> = archive.discoveries().iter().filter(|d| filter.accepts(d)).collect();
    let items = matching.iter().skip(offset).take(limit).map(|d| summarize(d)).collect();
    Ok(Json(Page { total: matching.len(), offset, limit, goal_names: names, items }))
}

#[derive(Serialize)]
pub struct DiscoveryDetail {
    pub discovery: Discovery,
    pub goal_names: Vec<String>,
    /// From this discovery back to its parent-free ancestor.
    pub lineage: Vec<u64>,
    pub video_url: Option<String>,
    pub thumbnail_url: Option<String>,
}

fn parse_id(raw: &str) -> Result<u64, ApiError> {
    raw.parse().map_err(|_| ApiError::bad_request(format!("invalid discovery id {raw:?}")))
}

pub async fn get_discovery(State(state): State<AppState>, Path(raw): Path<String>) -> Result<Json<DiscoveryDetail>, ApiError> {
    let id = parse_id(&raw)?;
    let archive = read(&state);
    let d = archive.get(id).ok_or_else(|| ApiError::not_found(format!("no discovery {id}")))?;
    let lineage = archive.lineage(id).expect("parents of stored discoveries exist");
    Ok(Json(DiscoveryDetail {
        discovery: d.clone(),
        goal_names: archive.meta().goal_names.clone(),
        lineage,
        video_url: d.artifacts.video.as_ref().map(|_| format!("/api/discoveries/{id}/video")),
        thumbnail_url: d.artifacts.snapshot.as_ref().map(|_| format!("/api/discoveries/{id}/thumbnail")),
    }))
}

fn artifact_path(state: &AppState, id: u64, pick: fn(&Discovery) -> Option<&String>) -> Result<std::path::PathBuf, ApiError> {
    let archive = read(state);
    let d = archive.get(id).ok_or_else(|| ApiError::not_found(format!("no discovery {id}")))?;
    let rel = pick(d).ok_or_else(|| ApiError::not_found(format!("discovery {id} has no such artifact")))?;
    Ok(archive.dir().join(rel))
}

pub async fn get_video(
    State(state): State<AppState>,
    Path(raw): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let id = parse_id(&raw)?;
    let path = artifact_path(&state, id, |d| d.artifacts.video.as_ref())?;
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::not_found(format!("video of discovery {id} is unavailable: {e}")))?;
    let content_type = if path.extension().is_some_and(|e| e == "mp4") { "video/mp4" } else { "application/octet-stream" };
    let len = bytes.len() as u64;
    let range = match headers.get(header::RANGE).and_then(|v| v.to_str().ok()) {
        Some(h) => match parse_range(h, len) {
            Ok(r) => r,
            Err(()) => {
                let mut resp = StatusCode::RANGE_NOT_SATISFIABLE.into_response();
                resp.headers_mut().insert(header::CONTENT_RANGE, hv(&format!("bytes */{len}")));
                return Ok(resp);
            }
        },
        None => None,
    };
    let mut resp = match range {
        Some(r) => {
            let body = bytes[r.start as usize..=r.end as usize].to_vec();
            let mut resp = (StatusCode::PARTIAL_CONTENT, Body::from(body)).into_response();
            resp.headers_mut().insert(header::CONTENT_RANGE, hv(&format!("bytes {}-{}/{len}", r.start, r.end)));
            resp
        }
        None => (StatusCode::OK, Body::from(bytes)).into_response(),
    };
    resp.headers_mut().insert(header::ACCEPT_RANGES, HeaderValue::from_static("bytes"));
    resp.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type));
    Ok(resp)
}

fn hv(s: &str) -> HeaderValue {
    HeaderValue::from_str(s).expect("ascii header value")
}

/// Final frame of a run as a binary PPM image.
pub async fn get_thumbnail(State(state): State<AppState>, Path(raw): Path<String>) -> Result<Response, ApiError> {
    let id = parse_id(&raw)?;
    let path = artifact_path(&state, id, |d| d.artifacts.snapshot.as_ref())?;
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::not_found(format!("snapshot of discovery {id} is unavailable: {e}")))?;
    let snap = Snapshot::from_bytes(&bytes)?;
    let frame = render_frame(&snap.state, &snap.params);
    let mut out = format!("P6\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.rgb);
    let mut resp = (StatusCode::OK, Body::from(out)).into_response();
    resp.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static("image/x-portable-pixmap"));
    Ok(resp)
}

#[derive(Serialize)]
pub struct MetricsSummary {
    pub experiment: flowlenia::metrics::ExperimentKind,
    pub goal_names: Vec<String>,
    pub discoveries: usize,
    pub successful: usize,
    pub failed: usize,
    pub by_branch: BTreeMap<String, usize>,
    pub goal_min: Option<Vec<f64>>,
    pub goal_max: Option<Vec<f64>>,
    pub avg_pairwise_distance: Option<f64>,
    pub coverage: Option<usize>,
    pub bins: usize,
}

pub async fn summary(State(state): State<AppState>) -> Json<MetricsSummary> {
    let archive = read(&state);
    let goals: Vec<Vec<f64>> = archive.goals().into_iter().map(<[f64]>::to_vec).collect();
    let mut by_branch = BTreeMap::new();
    for d in archive.discoveries() {
        let name = serde_json::to_value(d.branch).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        *by_branch.entry(name).or_insert(0) += 1;
    }
    let norm = Normalizer::of(&goals).ok();
    let points = norm.as_ref().map(|n| n.apply_all(&goals));
    Json(MetricsSummary {
        experiment: archive.meta().campaign.experiment,
        goal_names: archive.meta().goal_names.clone(),
        discoveries: archive.len(),
        successful: goals.len(),
        failed: archive.len() - goals.len(),
        by_branch,
        goal_min: norm.as_ref().map(|n| n.lo.clone()),
        goal_max: norm.as_ref().map(|n| n.hi.clone()),
        avg_pairwise_distance: points.as_ref().and_then(|p| avg_pairwise_distance(p).ok()),
        coverage: points.as_ref().map(|p| bin_coverage(p, DEFAULT_BINS)),
        bins: DEFAULT_BINS,
    })
}
