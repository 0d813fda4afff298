//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! The paired campaigns are slow, so their archives are cached under
//! `FLOWLENIA_ACCEPTANCE_DIR` (default: the cargo target tmp dir) and resumed
//! on the next run. Delete that directory to recompute them from scratch.

use std::collections::HashSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use flowlenia::archive::{
    avg_pairwise_distance, bin_coverage, convex_hull_area, coverage_over_time, ArchiveIndex, ArchiveMeta,
    ArtifactPolicy, Normalizer, DEFAULT_BINS, LEDGER_FILE,
};
use flowlenia::engine::{
    compute_affinity, compute_flow, Dynamics, GridState, GrowthSpec, KernelSpec, Ring, Rules, SimConfig, World,
};
use flowlenia::explorer::{run_campaign, CampaignConfig, Policy};
use flowlenia::genome::{
    mixing_negotiation, mixing_stochastic, Contribution, GenomeId, ParameterMap,
};
use flowlenia::metrics::{
    compression_complexity, encode, evolutionary_activity, multiscale_entropy, EncoderConfig, Frame, FrameSequence,
    PopulationSeries,
};
use flowlenia::rng::stream;
use flowlenia::run::Recording;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_state(n: usize, seed: u64) -> GridState {
    let mut rng = stream(&[seed]);
    let mass = (0..n * n).map(|_| rng.random::<f64>()).collect();
    GridState::from_parts(n, 1, mass, vec![false; n * n]).unwrap()
}

fn mass_conservation() -> Outcome {
    let c = CampaignConfig::preset("ecosystem-desk").unwrap();
    let space = c.search_space().unwrap();
    let cfg = space.world_config(&space.sample(&mut stream(&[2024])), &c.template, 2024).unwrap();
    assert_eq!((cfg.sim.grid_size, cfg.sim.channels), (64, 1));
    let mut world = World::new(cfg).unwrap();
    let initial = world.state().total_mass();
    let began = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let r = world.step().unwrap();
        worst = worst.max(((r.mass_after[0] - r.mass_before[0]) / r.mass_before[0]).abs());
    }
    let elapsed = began.elapsed().as_secs_f64();
    let cumulative = ((world.state().total_mass() - initial) / initial).abs();
    outcome(
        worst <= 1e-9 && cumulative <= 1e-6 && elapsed < 30.0,
        format!("worst step drift {worst:.2e}, cumulative {cumulative:.2e}, {elapsed:.1} s"),
    )
}

/// Kernel profile evaluated independently: Gaussian rings over the relative radius.
fn naive_kernel(spec: &KernelSpec, n: usize) -> Vec<Vec<f64>> {
    let mut k = vec![vec![0.0; n]; n];
    let mut total = 0.0;
    let half = n as isize / 2;
    for dy in -half..half {
        for dx in -half..half {
            let r = ((dx * dx + dy * dy) as f64).sqrt();
            if r > spec.radius {
                continue;
            }
            let v: f64 = spec
                .rings
                .iter()
                .map(|ring| ring.b * (-((r / spec.radius - ring.a).powi(2)) / (2.0 * ring.w * ring.w)).exp())
                .sum();
            k[dy.rem_euclid(n as isize) as usize][dx.rem_euclid(n as isize) as usize] = v;
            total += v;
        }
    }
    k.iter_mut().flatten().for_each(|v| *v /= total);
    k
}

fn convolution_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, seed) in [(16usize, 1u64), (16, 2), (32, 3), (32, 4)] {
        let mut rng = stream(&[seed, 7]);
        let kernels: Vec<KernelSpec> = (0..3)
            .map(|_| KernelSpec {
                radius: rng.random_range(2.0..(n as f64 / 2.0 - 0.5)),
                rings: (0..rng.random_range(1..4))
                    .map(|_| Ring { a: rng.random_range(0.0..1.0), w: rng.random_range(0.05..0.5), b: rng.random_range(0.1..1.0) })
                    .collect(),
                source: 0,
                target: 0,
            })
            .collect();
        let growths: Vec<GrowthSpec> =
            (0..3).map(|_| GrowthSpec { mu: rng.random_range(0.05..0.5), sigma: rng.random_range(0.01..0.2) }).collect();
        let state = random_state(n, seed);
        let dynamics = Dynamics::new(Rules { kernels: kernels.clone(), growths: growths.clone() }, n, 1).unwrap();
        let fields = dynamics.growth_fields(&state);
        let a = state.channel(0);
        for (i, (spec, g)) in kernels.iter().zip(&growths).enumerate() {
            let k = naive_kernel(spec, n);
            let fast = fields.kernel(i);
            for y in 0..n {
                for x in 0..n {
                    let mut u = 0.0;
                    for ky in 0..n {
                        for kx in 0..n {
                            u += k[ky][kx] * a[((y + n - ky) % n) * n + (x + n - kx) % n];
                        }
                    }
                    let expected = 2.0 * (-(u - g.mu).powi(2) / (2.0 * g.sigma * g.sigma)).exp() - 1.0;
                    worst = worst.max((fast[y * n + x] - expected).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-6, format!("max abs error {worst:.2e} over 16x16 and 32x32"))
}

fn central(field: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |x: usize, y: usize| field[(y % n) * n + x % n];
    let mut gx = vec![0.0; n * n];
    let mut gy = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            gx[y * n + x] = (at(x + 1, y) - at(x + n - 1, y)) / 2.0;
            gy[y * n + x] = (at(x, y + 1) - at(x, y + n - 1)) / 2.0;
        }
    }
    (gx, gy)
}

fn flow_limits() -> Outcome {
    let n = 32;
    let state = random_state(n, 11);
    let kernels = vec![KernelSpec { radius: 6.0, rings: vec![Ring { a: 0.5, w: 0.15, b: 1.0 }], source: 0, target: 0 }];
    let growths = vec![GrowthSpec { mu: 0.3, sigma: 0.1 }];
    let params = ParameterMap::uniform(n * n, &[1.0], &[0.0]).unwrap();
    let u = compute_affinity(&state, &params, &kernels, &growths).unwrap();
    let (ux, uy) = central(u.channel(0), n);
    let (sx, sy) = central(state.channel(0), n);
    let base = SimConfig { grid_size: n, max_displacement: 1e12, ..SimConfig::default() };
    let mut worst: f64 = 0.0;
    // a huge threshold never crowds; a tiny one always does
    for (theta_a, ex, ey, sign) in [(1e300, &ux, &uy, 1.0), (1e-300, &sx, &sy, -1.0)] {
        let f = compute_flow(&u, &state, &SimConfig { theta_a, ..base.clone() });
        for cell in 0..n * n {
            let (vx, vy) = f.at(0, cell);
            worst = worst.max((vx - sign * ex[cell]).abs()).max((vy - sign * ey[cell]).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max pointwise error {worst:.2e} for alpha = 0 and alpha = 1"))
}

/// Sum of squared positive increments, summed in step order then genome order.
fn ea_oracle(rows: &[Vec<(u64, f64)>]) -> f64 {
    let mut a = 0.0;
    for t in 1..rows.len() {
        let mut ids: Vec<u64> = rows[t].iter().map(|r| r.0).collect();
        ids.sort_unstable();
        for id in ids {
            let now = rows[t].iter().find(|r| r.0 == id).unwrap().1;
            let before = rows[t - 1].iter().find(|r| r.0 == id).map_or(0.0, |r| r.1);
            let d = now - before;
            if d > 0.0 {
                a += d * d;
            }
        }
    }
    a
}

fn series(rows: &[Vec<(u64, f64)>]) -> PopulationSeries {
    let mut s = PopulationSeries::new(1);
    for (t, row) in rows.iter().enumerate() {
        s.push(t as u64, row.iter().map(|&(g, p)| (GenomeId(g), p)).collect()).unwrap();
    }
    s
}

fn ea_oracle_check() -> Outcome {
    let mut cases: Vec<Vec<Vec<(u64, f64)>>> = vec![
        [0.1, 0.3, 0.2, 0.6].iter().map(|&p| vec![(1, p)]).collect(),
        [0.9, 0.7, 0.4, 0.1].iter().map(|&p| vec![(1, p)]).collect(),
    ];
    let mut rng = stream(&[99]);
    while cases.len() < 20 {
        let steps = rng.random_range(2..12);
        let rows = (0..steps)
            .map(|_| {
                let ids: Vec<u64> = (0..6u64).filter(|_| rng.random_bool(0.6)).collect();
                let raw: Vec<f64> = ids.iter().map(|_| rng.random::<f64>()).collect();
                let total: f64 = raw.iter().sum::<f64>().max(1.0);
                ids.into_iter().zip(raw).map(|(g, r)| (g, r / total)).collect()
            })
            .collect();
        cases.push(rows);
    }
    let mut mismatches = 0;
    for rows in &cases {
        if evolutionary_activity(&series(rows)).unwrap() != ea_oracle(rows) {
            mismatches += 1;
        }
    }
    let worked = evolutionary_activity(&series(&cases[0])).unwrap();
    let decreasing = evolutionary_activity(&series(&cases[1])).unwrap();
    outcome(
        mismatches == 0 && (worked - 0.20).abs() <= 1e-12 && decreasing == 0.0,
        format!("{mismatches} mismatches on {} series, worked series {worked:.15}, decreasing {decreasing}", cases.len()),
    )
}

fn entropy_properties() -> Outcome {
    let n = 64;
    let uniform = GridState::from_parts(n, 1, vec![1.0; n * n], vec![false; n * n]).unwrap();
    let mut point = GridState::empty(n, 1);
    point.set(17, 40, 0, 3.0);
    let mut split = GridState::empty(n, 1);
    split.set(0, 0, 0, 1.0);
    split.set(n - 1, n - 1, 0, 1.0);
    let mut worst: f64 = 0.0;
    for level in [3u32, 4, 5] {
        let expected = 2f64.ln() / 4f64.powi(level as i32).ln();
        worst = worst
            .max((multiscale_entropy(&uniform, level).unwrap() - 1.0).abs())
            .max(multiscale_entropy(&point, level).unwrap().abs())
            .max((multiscale_entropy(&split, level).unwrap() - expected).abs());
    }
    outcome(worst <= 1e-9, format!("max error {worst:.2e} at levels 3, 4, 5"))
}

fn contributions(raw: &[(f64, f64, f64)]) -> Vec<Contribution> {
    raw.iter()
        .enumerate()
        .map(|(source, &(mass, transfer, affinity))| Contribution { source, mass, transfer, affinity })
        .collect()
}

fn mixing_distributions() -> Outcome {
    const DRAWS: usize = 100_000;
    let fixtures = [
        [(1.0, 0.5, 0.2), (0.4, 1.0, 0.9), (0.3, 0.2, -0.5)],
        [(2.0, 0.1, 1.0), (0.5, 0.5, 0.0), (1.0, 1.0, 0.3)],
    ];
    let mut worst: f64 = 0.0;
    for (f, raw) in fixtures.iter().enumerate() {
        let cs = contributions(raw);
        let delivered: Vec<f64> = raw.iter().map(|(m, t, _)| m * t).collect();
        let total: f64 = delivered.iter().sum();
        let stochastic: Vec<f64> = delivered.iter().map(|d| d / total).collect();
        for (rule, beta) in [("stochastic", 0.0), ("negotiation", 0.0), ("negotiation", 1.0), ("negotiation", 5.0)] {
            let expected: Vec<f64> = if rule == "stochastic" {
                stochastic.clone()
            } else {
                let e: Vec<f64> = raw.iter().map(|(m, t, a)| (beta * m * t * a).exp()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|v| v / s).collect()
            };
            if rule == "negotiation" && beta == 0.0 && expected.iter().any(|p| (p - 1.0 / 3.0).abs() > 1e-12) {
                return outcome(false, "beta = 0 oracle not uniform");
            }
            let mut rng = stream(&[f as u64, beta.to_bits()]);
            let mut counts = [0usize; 3];
            for _ in 0..DRAWS {
                let pick = if rule == "stochastic" {
                    mixing_stochastic(&cs, &mut rng)
                } else {
                    mixing_negotiation(&cs, beta, &mut rng)
                };
                counts[pick.unwrap().unwrap()] += 1;
            }
            for (c, p) in counts.iter().zip(&expected) {
                worst = worst.max((*c as f64 / DRAWS as f64 - p).abs());
            }
        }
    }
    let single = contributions(&[(0.7, 0.3, -2.0)]);
    let mut rng = stream(&[5]);
    let deterministic = (0..1000).all(|_| {
        mixing_stochastic(&single, &mut rng).unwrap() == Some(0)
            && mixing_negotiation(&single, 3.0, &mut rng).unwrap() == Some(0)
    });
    outcome(
        worst <= 0.02 && deterministic,
        format!("max frequency error {worst:.4} over 1e5 draws, single source deterministic: {deterministic}"),
    )
}

fn compression_ordering() -> Outcome {
    let (w, frames) = (64, 100);
    let mut constant = FrameSequence::new(1);
    let mut moving = FrameSequence::new(1);
    let mut noise = FrameSequence::new(1);
    let mut rng = stream(&[3]);
    for t in 0..frames {
        constant.push(Frame::solid(w, w, [30, 60, 90]));
        let mut f = Frame::solid(w, w, [0, 0, 0]);
        for y in 0..10 {
            for x in 0..10 {
                let (px, py) = ((x + t) % w, (y + t / 2) % w);
                f.rgb[(py * w + px) * 3..(py * w + px) * 3 + 3].copy_from_slice(&[240, 200, 40]);
            }
        }
        moving.push(f);
        noise.push(Frame { width: w, height: w, rgb: (0..w * w * 3).map(|_| rng.random()).collect() });
    }
    let enc = EncoderConfig::default();
    let bytes = |s: &FrameSequence| compression_complexity(s, &enc).unwrap();
    let (c, m, z) = (bytes(&constant), bytes(&moving), bytes(&noise));
    let repeatable = [&constant, &moving, &noise].iter().all(|s| encode(s, &enc).unwrap() == encode(s, &enc).unwrap());
    outcome(
        c < m && m < z && repeatable,
        format!("{} bytes: constant {c} < moving {m} < noise {z}, repeat identical: {repeatable}", enc.variant_name()),
    )
}

fn tiny_campaign() -> CampaignConfig {
    let mut c = CampaignConfig::preset("movement-desk").unwrap();
    c.template.sim.grid_size = 16;
    c.template.sim.steps = 30;
    c.space.kernel_count = 2;
    c.iterations = 12;
    c.bootstrap = 4;
    c.seed = 5;
    c.recording = Recording { census_stride: 5, frame_stride: 10 };
    c
}

fn ledger_after(campaign: &CampaignConfig, stop_at: Option<usize>) -> (String, Vec<Vec<f64>>) {
    let dir = tempfile::tempdir().unwrap();
    let mut archive = ArchiveIndex::create(dir.path(), ArchiveMeta::for_campaign(campaign)).unwrap();
    if let Some(k) = stop_at {
        let partial = CampaignConfig { iterations: k, ..campaign.clone() };
        run_campaign(&partial, &mut archive, None).unwrap();
        drop(archive);
        archive = ArchiveIndex::open(dir.path()).unwrap();
    }
    run_campaign(campaign, &mut archive, None).unwrap();
    let goals = archive.goals().into_iter().map(<[f64]>::to_vec).collect();
    (std::fs::read_to_string(dir.path().join(LEDGER_FILE)).unwrap(), goals)
}

fn end_to_end_determinism(archives: &mut Vec<Vec<Vec<f64>>>) -> Outcome {
    let c = tiny_campaign();
    let (a, goals) = ledger_after(&c, None);
    let (b, _) = ledger_after(&c, None);
    let resumed: Vec<bool> = [4, 6, 9, 11].iter().map(|&k| ledger_after(&c, Some(k)).0 == a).collect();
    archives.push(goals);
    outcome(
        a == b && resumed.iter().all(|&r| r),
        format!("two serial runs identical: {}, resume at k = 4, 6, 9, 11 identical: {resumed:?}", a == b),
    )
}

fn apd_oracle(p: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            sum += p[i].iter().zip(&p[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            pairs += 1;
        }
    }
    sum / pairs as f64
}

fn coverage_oracle(p: &[Vec<f64>], bins: usize) -> usize {
    let cells: HashSet<Vec<usize>> = p
        .iter()
        .map(|point| point.iter().map(|&v| ((v * bins as f64).floor().max(0.0) as usize).min(bins - 1)).collect())
        .collect();
    cells.len()
}

fn analytics_oracles(archives: &[Vec<Vec<f64>>]) -> Outcome {
    let mut rng = stream(&[77]);
    let mut mismatches = 0;
    for n in [50, 200, 500, 1000] {
        let p: Vec<Vec<f64>> = (0..n).map(|_| (0..7).map(|_| rng.random::<f64>()).collect()).collect();
        mismatches += usize::from(avg_pairwise_distance(&p).unwrap() != apd_oracle(&p));
        mismatches += usize::from(bin_coverage(&p, DEFAULT_BINS) != coverage_oracle(&p, DEFAULT_BINS));
    }
    let monotone = archives.iter().filter(|g| g.len() >= 2).all(|g| {
        let pts = Normalizer::of(g).unwrap().apply_all(g);
        coverage_over_time(&pts, DEFAULT_BINS, 1).windows(2).all(|w| w[0].coverage <= w[1].coverage)
    });
    outcome(
        mismatches == 0 && monotone,
        format!("{mismatches} oracle mismatches, coverage over time monotone on {} archives: {monotone}", archives.len()),
    )
}

fn cache_dir() -> PathBuf {
    std::env::var_os("FLOWLENIA_ACCEPTANCE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-campaigns"))
}

/// Runs (or resumes) one cached desk campaign and returns its goals.
fn campaign_goals(preset: &str, seed: u64, policy: Policy) -> flowlenia::Result<Vec<Vec<f64>>> {
    let mut cfg = CampaignConfig::preset(preset)?;
    cfg.seed = seed;
    cfg.policy = policy;
    cfg.artifacts = ArtifactPolicy::none();
    let dir = cache_dir().join(format!("{preset}-{seed}-{policy:?}"));
    let mut archive = match ArchiveIndex::open(&dir) {
        Ok(a) if a.meta().campaign == cfg => a,
        Ok(_) => {
            std::fs::remove_dir_all(&dir)?;
            ArchiveIndex::create(&dir, ArchiveMeta::for_campaign(&cfg))?
        }
        Err(_) => ArchiveIndex::create(&dir, ArchiveMeta::for_campaign(&cfg))?,
    };
    let began = Instant::now();
    run_campaign(&cfg, &mut archive, None)?;
    eprintln!("  {preset} seed {seed} {policy:?}: {} discoveries ({:.0?})", archive.len(), began.elapsed());
    Ok(archive.goals().into_iter().map(<[f64]>::to_vec).collect())
}

const SEEDS: [u64; 3] = [1, 2, 3];

fn imgep_beats_random(archives: &mut Vec<Vec<Vec<f64>>>) -> Outcome {
    let mut wins = 0;
    let mut ratios = Vec::new();
    let mut rows = Vec::new();
    for seed in SEEDS {
        let imgep = campaign_goals("ecosystem-desk", seed, Policy::Imgep).unwrap();
        let random = campaign_goals("ecosystem-desk", seed, Policy::Random).unwrap();
        let norm = Normalizer::union(&[&imgep, &random]).unwrap();
        let (pi, pr) = (norm.apply_all(&imgep), norm.apply_all(&random));
        let (ci, cr) = (bin_coverage(&pi, DEFAULT_BINS), bin_coverage(&pr, DEFAULT_BINS));
        let ratio = avg_pairwise_distance(&pi).unwrap() / avg_pairwise_distance(&pr).unwrap();
        wins += usize::from(ci > cr);
        ratios.push(ratio);
        rows.push(format!("seed {seed}: coverage {ci} vs {cr}, APD ratio {ratio:.3}"));
        archives.push(imgep);
        archives.push(random);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    outcome(
        wins >= 2 && mean > 1.2,
        format!("coverage wins {wins}/3, mean APD ratio {mean:.3} ({})", rows.join("; ")),
    )
}

fn movement_direction(archives: &mut Vec<Vec<Vec<f64>>>) -> Outcome {
    let n = CampaignConfig::preset("movement-desk").unwrap().template.sim.grid_size as f64;
    let mut wins = 0;
    let mut far = false;
    let mut rows = Vec::new();
    for seed in SEEDS {
        let imgep = campaign_goals("movement-desk", seed, Policy::Imgep).unwrap();
        let random = campaign_goals("movement-desk", seed, Policy::Random).unwrap();
        let hull = |g: &[Vec<f64>]| convex_hull_area(&g.iter().map(|v| (v[0], v[1])).collect::<Vec<_>>());
        let (hi, hr) = (hull(&imgep), hull(&random));
        wins += usize::from(hi > hr);
        // the start sits in the (0, 0) corner, so the far half lies past the anti-diagonal
        far |= imgep.iter().any(|v| v[0] + v[1] > n - 1.0);
        let reach = imgep.iter().map(|v| v[0] + v[1]).fold(f64::MIN, f64::max);
        rows.push(format!("seed {seed}: hull {hi:.1} vs {hr:.1}, max x+y {reach:.1}"));
        archives.push(imgep);
        archives.push(random);
    }
    outcome(
        wins >= 2 && far,
        format!("hull wins {wins}/3, far half reached: {far} ({})", rows.join("; ")),
    )
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters probe the binary; only a bare run executes
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }

    let mut archives = Vec::new();
    let mut results: Vec<(&str, Outcome, bool)> = Vec::new();
    let mut check = |name: &'static str, required: bool, f: &mut dyn FnMut(&mut Vec<Vec<Vec<f64>>>) -> Outcome| {
        let o = f(&mut archives);
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o, required));
    };
    check("mass conservation", true, &mut |_| mass_conservation());
    check("convolution oracle", true, &mut |_| convolution_oracle());
    check("flow limiting cases", true, &mut |_| flow_limits());
    check("evolutionary activity oracle", true, &mut |_| ea_oracle_check());
    check("entropy properties", true, &mut |_| entropy_properties());
    check("mixing distributions", true, &mut |_| mixing_distributions());
    check("compression ordering", true, &mut |_| compression_ordering());
    check("end-to-end determinism", true, &mut end_to_end_determinism);
    // empirical outcomes of stochastic search: reported, never forced
    check("imgep beats random", false, &mut imgep_beats_random);
    check("movement direction", false, &mut movement_direction);
    check("analytics oracles", true, &mut |a| analytics_oracles(a));

    let broken: Vec<&str> = results.iter().filter(|(_, o, required)| *required && !o.pass).map(|r| r.0).collect();
    let passed = results.iter().filter(|r| r.1.pass).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if broken.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("required criteria failed: {}", broken.join(", "));
        ExitCode::FAILURE
    }
}
