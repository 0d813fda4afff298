//! Runs an IMGEP campaign and its random baseline with the same seed and
//! prints union-normalized coverage and spread.
//!
//! usage: paired_campaigns <preset> <seed> [iterations] [out-dir]

use std::path::PathBuf;

use flowlenia::archive::{avg_pairwise_distance, bin_coverage, convex_hull_area, ArchiveIndex, ArchiveMeta, ArtifactPolicy, Normalizer, DEFAULT_BINS};
use flowlenia::explorer::{run_campaign, CampaignConfig, Policy};
use flowlenia::metrics::ExperimentKind;

fn main() -> flowlenia::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let preset = args.get(1).map_or("ecosystem-desk", String::as_str);
    let seed: u64 = args.get(2).map_or(0, |s| s.parse().expect("seed"));
    let out = args.get(4).map_or_else(|| std::env::temp_dir().join("paired"), PathBuf::from);
    let mut goals = Vec::new();
    for policy in [Policy::Imgep, Policy::Random] {
        let mut cfg = CampaignConfig::preset(preset)?;
        cfg.seed = seed;
        cfg.policy = policy;
        cfg.artifacts = ArtifactPolicy::none();
        if let Some(n) = args.get(3) {
            cfg.iterations = n.parse().expect("iterations");
        }
        let dir = out.join(format!("{preset}-{seed}-{policy:?}"));
        let mut archive = match ArchiveIndex::open(&dir) {
            Ok(a) => a,
            Err(_) => ArchiveIndex::create(&dir, ArchiveMeta::for_campaign(&cfg))?,
        };
        let start = std::time::Instant::now();
        run_campaign(&cfg, &mut archive, None)?;
        let g: Vec<Vec<f64>> = archive.goals().into_iter().map(<[f64]>::to_vec).collect();
        eprintln!("{policy:?}: {} ok of {} in {:.0?}", g.len(), archive.len(), start.elapsed());
        goals.push((cfg.experiment, g));
    }
    let norm = Normalizer::union(&[&goals[0].1, &goals[1].1])?;
    for (label, (kind, g)) in ["imgep", "random"].iter().zip(&goals) {
        let pts = norm.apply_all(g);
        let mut line = format!(
            "{label}: coverage {} apd {:.4}",
            bin_coverage(&pts, DEFAULT_BINS),
            avg_pairwise_distance(&pts)?
        );
        if *kind == ExperimentKind::Movement {
            let xy: Vec<(f64, f64)> = g.iter().map(|v| (v[0], v[1])).collect();
            let far = xy.iter().map(|p| p.0 + p.1).fold(f64::MIN, f64::max);
            line += &format!(" hull {:.2} max_x+y {:.2}", convex_hull_area(&xy), far);
        }
        println!("{line}");
    }
    Ok(())
}
