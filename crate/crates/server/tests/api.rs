use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use flowlenia::archive::{ArchiveIndex, ArchiveMeta};
use flowlenia::explorer::{run_campaign, CampaignConfig, Policy};
use flowlenia::run::Recording;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn tiny_campaign(policy: Policy, iterations: usize) -> CampaignConfig {
    let mut c = CampaignConfig::preset("movement-desk").unwrap();
    c.template.sim.grid_size = 16;
    c.template.sim.steps = 20;
    c.space.kernel_count = 2;
    c.iterations = iterations;
    c.bootstrap = 3;
    c.policy = policy;
    c.seed = 11;
    c.recording = Recording { census_stride: 5, frame_stride: 5 };
    c.validate().unwrap();
    c
}

fn archive_with(dir: &std::path::Path, policy: Policy, iterations: usize) -> ArchiveIndex {
    let campaign = tiny_campaign(policy, iterations);
    let mut archive = ArchiveIndex::create(dir, ArchiveMeta::for_campaign(&campaign)).unwrap();
    run_campaign(&campaign, &mut archive, None).unwrap();
    archive
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, headers, body)
}

async fn get_json(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, _, body) = call(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (status, serde_json::from_slice(&body).unwrap_or(Value::Null))
}

async fn post_json(app: &Router, uri: &str, v: Value) -> (StatusCode, Value) {
    let req = Request::post(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(v.to_string()))
        .unwrap();
    let (status, _, body) = call(app, req).await;
    (status, serde_json::from_slice(&body).unwrap_or(Value::Null))
}

#[tokio::test]
async fn empty_archive_lists_an_empty_page() {
    let dir = tempfile::tempdir().unwrap();
    let campaign = tiny_campaign(Policy::Random, 3);
    let archive = ArchiveIndex::create(dir.path(), ArchiveMeta::for_campaign(&campaign)).unwrap();
    let app = flowlenia_server::app(archive, 4);
    let (status, page) = get_json(&app, "/api/discoveries").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(page["total"], 0);
    assert_eq!(page["items"].as_array().unwrap().len(), 0);
    let (status, summary) = get_json(&app, "/api/metrics/summary").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["discoveries"], 0);
    assert!(summary["coverage"].is_null());
}

#[tokio::test]
async fn paging_and_filters() {
    let dir = tempfile::tempdir().unwrap();
    let archive = archive_with(dir.path(), Policy::Imgep, 8);
    let goals: Vec<Option<Vec<f64>>> = archive.discoveries().iter().map(|d| d.goal.clone()).collect();
    let app = flowlenia_server::app(archive, 4);

    let (_, page) = get_json(&app, "/api/discoveries?offset=3&limit=2").await;
    assert_eq!(page["total"], 8);
    let ids: Vec<u64> = page["items"].as_array().unwrap().iter().map(|i| i["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, vec![3, 4]);

    let (status, page) = get_json(&app, "/api/discoveries?offset=50").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(page["total"], 8);
    assert!(page["items"].as_array().unwrap().is_empty());

    // threshold at the median reached x, checked against a linear scan
    let mut xs: Vec<f64> = goals.iter().flatten().map(|g| g[0]).collect();
    xs.sort_by(f64::total_cmp);
    let x = xs[xs.len() / 2];
    let expected: Vec<u64> = goals
        .iter()
        .enumerate()
        .filter(|(_, g)| g.as_ref().is_some_and(|g| g[0] >= x))
        .map(|(i, _)| i as u64)
        .collect();
    let (_, page) = get_json(&app, &format!("/api/discoveries?min_com_x={x}")).await;
    let ids: Vec<u64> = page["items"].as_array().unwrap().iter().map(|i| i["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, expected);
    assert_eq!(page["total"], expected.len());

    let (_, page) = get_json(&app, "/api/discoveries?branch=bootstrap").await;
    assert_eq!(page["total"], 3);

    for bad in ["/api/discoveries?min_nope=1", "/api/discoveries?min_com_x=abc", "/api/discoveries?colour=red"] {
        let (status, body) = get_json(&app, bad).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
        assert!(body["error"].is_string());
    }
}

#[tokio::test]
async fn detail_lineage_and_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let archive = archive_with(dir.path(), Policy::Imgep, 8);
    let child = archive.discoveries().iter().find(|d| d.parent.is_some()).expect("a goal-directed child").id;
    let app = flowlenia_server::app(archive, 4);

    let (status, detail) = get_json(&app, "/api/discoveries/0").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(detail["lineage"], json!([0]));
    assert_eq!(detail["goal_names"], json!(["com_x", "com_y"]));
    assert!(detail["discovery"]["theta"]["values"].is_array());

    let (_, detail) = get_json(&app, &format!("/api/discoveries/{child}")).await;
    let lineage = detail["lineage"].as_array().unwrap();
    assert!(lineage.len() >= 2);
    let root = lineage.last().unwrap().as_u64().unwrap();
    let (_, root_detail) = get_json(&app, &format!("/api/discoveries/{root}")).await;
    assert!(root_detail["discovery"]["parent"].is_null());

    let (status, _) = get_json(&app, "/api/discoveries/999").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = get_json(&app, "/api/discoveries/abc").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn video_supports_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let archive = archive_with(dir.path(), Policy::Random, 2);
    let rel = archive.get(0).unwrap().artifacts.video.clone().expect("video artifact");
    let full = std::fs::read(dir.path().join(rel)).unwrap();
    let app = flowlenia_server::app(archive, 4);

    let (status, headers, body) = call(&app, Request::get("/api/discoveries/0/video").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers[header::ACCEPT_RANGES], "bytes");
    assert_eq!(body, full);

    let req = Request::get("/api/discoveries/0/video").header(header::RANGE, "bytes=2-9").body(Body::empty()).unwrap();
    let (status, headers, body) = call(&app, req).await;
    assert_eq!(status, StatusCode::PARTIAL_CONTENT);
    assert_eq!(body, full[2..=9]);
    assert_eq!(headers[header::CONTENT_RANGE], format!("bytes 2-9/{}", full.len()).as_str());

    let req = Request::get("/api/discoveries/0/video")
        .header(header::RANGE, format!("bytes={}-", full.len()))
        .body(Body::empty())
        .unwrap();
    let (status, _, _) = call(&app, req).await;
    assert_eq!(status, StatusCode::RANGE_NOT_SATISFIABLE);

    let (status, headers, body) =
        call(&app, Request::get("/api/discoveries/0/thumbnail").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers[header::CONTENT_TYPE], "image/x-portable-pixmap");
    assert!(body.starts_with(b"P6\n16 16\n255\n"));
}

#[tokio::test]
async fn summary_matches_archive() {
    let dir = tempfile::tempdir().unwrap();
    let archive = archive_with(dir.path(), Policy::Random, 5);
    let ok = archive.goals().len();
    let app = flowlenia_server::app(archive, 4);
    let (_, s) = get_json(&app, "/api/metrics/summary").await;
    assert_eq!(s["experiment"], "movement");
    assert_eq!(s["discoveries"], 5);
    assert_eq!(s["successful"], ok);
    assert_eq!(s["by_branch"]["random"], 5);
    assert_eq!(s["bins"], 5);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn jobs_run_to_completion_and_append() {
    let dir = tempfile::tempdir().unwrap();
    let archive = archive_with(dir.path(), Policy::Imgep, 4);
    let app = flowlenia_server::app(archive, 4);

    let (status, job) = post_json(&app, "/api/jobs", json!({"parent": 2, "multiplier": 1.5})).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_eq!(job["state"], "queued");
    let id = job["id"].as_u64().unwrap();

    let order = ["queued", "running", "done"];
    let mut last = 0;
    let mut done = Value::Null;
    for _ in 0..600 {
        let (status, job) = get_json(&app, &format!("/api/jobs/{id}")).await;
        assert_eq!(status, StatusCode::OK);
        let state = job["state"].as_str().unwrap().to_string();
        assert_ne!(state, "failed", "{job}");
        let pos = order.iter().position(|s| *s == state).unwrap();
        assert!(pos >= last, "state went backwards");
        last = pos;
        if state == "done" {
            done = job;
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    assert_eq!(done["discovery"], 4, "job did not finish: {done}");

    let (_, detail) = get_json(&app, "/api/discoveries/4").await;
    assert_eq!(detail["discovery"]["parent"], 2);
    assert_eq!(detail["discovery"]["branch"], "human");
    assert_eq!(detail["discovery"]["mutation_multiplier"], 1.5);
    assert_eq!(detail["lineage"][1], 2);
    let (_, page) = get_json(&app, "/api/discoveries").await;
    assert_eq!(page["total"], 5);

    // the append is durable
    drop(app);
    let reopened = ArchiveIndex::open_read_only(dir.path()).unwrap();
    assert_eq!(reopened.len(), 5);
}

#[tokio::test]
async fn invalid_jobs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let archive = archive_with(dir.path(), Policy::Random, 2);
    let app = flowlenia_server::app(archive, 4);
    let (status, _) = post_json(&app, "/api/jobs", json!({"parent": 7})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = post_json(&app, "/api/jobs", json!({"parent": 0, "multiplier": 0.0})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = post_json(&app, "/api/jobs", json!({"parent": 0, "overrides": {"nope": 1.0}})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = get_json(&app, "/api/jobs/42").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn full_queue_pushes_back() {
    let dir = tempfile::tempdir().unwrap();
    let archive = archive_with(dir.path(), Policy::Random, 2);
    let app = flowlenia_server::app(archive, 1);
    let mut statuses = Vec::new();
    for _ in 0..4 {
        statuses.push(post_json(&app, "/api/jobs", json!({"parent": 0})).await.0);
    }
    assert_eq!(statuses[0], StatusCode::ACCEPTED);
    assert!(statuses.contains(&StatusCode::SERVICE_UNAVAILABLE), "{statuses:?}");
}
