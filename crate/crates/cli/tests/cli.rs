use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use flowlenia::engine::InitLayout;
use flowlenia::explorer::CampaignConfig;
use flowlenia::rng::stream;
use flowlenia::run::Recording;

fn flowlenia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowlenia"))
        .args(args)
        .env_remove("FLOWLENIA_FFMPEG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tiny_config(dir: &Path, experiment: &str) -> String {
    let mut c = CampaignConfig::preset(&format!("{experiment}-desk")).unwrap();
    if experiment == "movement" {
        c.template.sim.grid_size = 16;
    }
    c.template.sim.steps = 30;
    c.space.kernel_count = 2;
    c.iterations = 12;
    c.bootstrap = 4;
    c.seed = 5;
    c.recording = Recording { census_stride: 5, frame_stride: 10 };
    let path = dir.join(format!("{experiment}.toml"));
    fs::write(&path, c.to_toml()).unwrap();
    path.to_string_lossy().into_owned()
}

fn ledger(dir: &Path) -> String {
    fs::read_to_string(dir.join("ledger.jsonl")).unwrap()
}

#[test]
fn missing_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = flowlenia(&["simulate", "--config", "/nonexistent/x.toml", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = flowlenia(&["explore", "--preset", "nope", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = flowlenia(&["explore", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = flowlenia(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn desk_preset_simulation_writes_a_seven_dimensional_vector() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let o = flowlenia(&["simulate", "--preset", "ecosystem-desk", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["steps_run"], 1000);
    assert_eq!(metrics["metrics"]["values"].as_array().unwrap().len(), 7);
    for f in ["snapshot.bin", "census.tsv", "video.rgb.deflate", "world.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn empty_world_reports_an_empty_census() {
    let tmp = tempfile::tempdir().unwrap();
    let c = CampaignConfig::preset("ecosystem-desk").unwrap();
    let space = c.search_space().unwrap();
    let mut world = space.world_config(&space.sample(&mut stream(&[1])), &c.template, 1).unwrap();
    world.init = InitLayout::Empty;
    world.sim.steps = 20;
    let path = tmp.path().join("world.toml");
    fs::write(&path, toml::to_string(&world).unwrap()).unwrap();
    let out = tmp.path().join("sim");
    let o = flowlenia(&[
        "simulate",
        "--world",
        path.to_str().unwrap(),
        "--experiment",
        "ecosystem",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("empty census"));
}

#[test]
fn random_policy_gives_parent_free_discoveries() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), "movement");
    let out = tmp.path().join("a");
    let o = flowlenia(&[
        "explore", "--config", &cfg, "--policy", "random", "--iterations", "10", "--jobs", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> = ledger(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 10);
    assert!(lines.iter().all(|d| d["parent"].is_null() && d["branch"] == "random"));
    assert!(stdout(&o).contains("coverage_5_bins"));
    assert!(out.join("report.tsv").exists());
    assert_eq!(fs::read_to_string(out.join("progress.log")).unwrap().lines().count(), 10);

    // an existing archive is never overwritten
    let o = flowlenia(&["explore", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn serial_runs_are_byte_identical_and_resume_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), "movement");
    let run = |name: &str, extra: &[&str]| {
        let out = tmp.path().join(name);
        let mut args = vec!["explore", "--config", &cfg, "--jobs", "1", "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = flowlenia(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a", &[]);
    let b = run("b", &[]);
    assert_eq!(ledger(&a), ledger(&b));
    assert_eq!(ledger(&a).lines().count(), 12);

    // stop at k = 6, then resume
    let c = run("c", &["--iterations", "6"]);
    assert_eq!(ledger(&c).lines().count(), 6);
    let o = flowlenia(&["explore", "--resume", "--iterations", "12", "--out", c.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(ledger(&c), ledger(&a));

    // a torn trailing record from a crash is dropped and recomputed
    let d = run("d", &["--iterations", "7"]);
    let mut text = ledger(&d);
    text.push_str("{\"id\":7,\"parent\":");
    fs::write(d.join("ledger.jsonl"), text).unwrap();
    let o = flowlenia(&["explore", "--resume", "--iterations", "12", "--out", d.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(ledger(&d), ledger(&a));

    let o = flowlenia(&["explore", "--resume", "--seed", "9", "--out", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_and_render() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), "movement");
    let archive = tmp.path().join("m");
    let o = flowlenia(&["explore", "--config", &cfg, "--jobs", "1", "--out", archive.to_str().unwrap()]);
    assert!(o.status.success());

    let o = flowlenia(&["analyze", archive.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let header = text.lines().next().unwrap();
    assert_eq!(header, "metric\tm");
    assert!(text.contains("mean_com_x"));
    assert!(text.contains("# coverage over time: m"));

    let report = tmp.path().join("report");
    let o = flowlenia(&["analyze", archive.to_str().unwrap(), archive.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("metric\tm\tm#1\n"));
    assert!(report.join("table.tsv").exists());

    // a campaign with a different goal space cannot be compared
    let eco_cfg = tiny_config(tmp.path(), "ecosystem");
    let eco = tmp.path().join("e");
    let o = flowlenia(&[
        "explore", "--config", &eco_cfg, "--policy", "random", "--iterations", "2", "--jobs", "1", "--out",
        eco.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = flowlenia(&["analyze", archive.to_str().unwrap(), eco.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    // replaying a stored seed reproduces the stored video exactly
    let stored = fs::read(archive.join("runs/000003/video.rgb.deflate")).unwrap();
    let out = tmp.path().join("r.deflate");
    let o = flowlenia(&["render", "--archive", archive.to_str().unwrap(), "--id", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&out).unwrap(), stored);

    let o = flowlenia(&["render", "--archive", archive.to_str().unwrap(), "--id", "99"]);
    assert_eq!(o.status.code(), Some(2));
}
