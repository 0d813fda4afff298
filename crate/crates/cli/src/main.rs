use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flowlenia::archive::{ArchiveIndex, ArchiveMeta, ArtifactPolicy, LEDGER_FILE};
use flowlenia::engine::{Snapshot, WorldConfig};
use flowlenia::explorer::{replay, run_campaign, CampaignConfig, Policy};
use flowlenia::metrics::{descriptor_from_parts, encode, EncoderConfig, ExperimentKind, ENCODER_ENV};
use flowlenia::rng::stream;
use flowlenia::run::simulate;

mod report;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<flowlenia::Error> for CliError {
    fn from(e: flowlenia::Error) -> Self {
        use flowlenia::Error as E;
        match e {
            E::Divergence(_) => CliError::Divergence(e.to_string()),
            E::Config(_) | E::Invalid(_) | E::NotFound(_) => CliError::Usage(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Flow Lenia simulation and open-ended exploration.
#[derive(Parser, Debug)]
#[command(
    name = "flowlenia",
    version,
    after_help = "Set FLOWLENIA_FFMPEG to an ffmpeg binary to store MP4 videos instead of deflate frame streams."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one world and write its snapshot, video, census and metrics.
    Simulate(SimulateArgs),
    /// Run or resume an exploration campaign.
    Explore(ExploreArgs),
    /// Compare archives: spread, coverage and coverage over time.
    Analyze(AnalyzeArgs),
    /// Replay a discovery and write its video.
    Render(RenderArgs),
    /// Serve an archive over HTTP.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct Source {
    /// Campaign config file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in campaign preset: ecosystem, ecosystem-desk, movement, movement-desk.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> CliResult<Option<CampaignConfig>> {
        match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                Ok(Some(CampaignConfig::from_toml(&text)?))
            }
            (None, Some(name)) => Ok(Some(CampaignConfig::preset(name)?)),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    /// Explicit world config (TOML) instead of a sampled one.
    #[arg(long, conflicts_with_all = ["config", "preset"])]
    world: Option<PathBuf>,
    /// Goal space to measure a --world run in.
    #[arg(long, requires = "world", value_parser = parse_experiment)]
    experiment: Option<ExperimentKind>,
    #[arg(long)]
    out: PathBuf,
    /// Seed used to sample parameters and drive the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    #[command(flatten)]
    source: Source,
    /// Archive directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Batch width and worker threads. Defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_parser = parse_policy)]
    policy: Option<Policy>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Continue the campaign stored in --out.
    #[arg(long)]
    resume: bool,
    /// Skip per-run snapshots, videos and census tables.
    #[arg(long)]
    no_artifacts: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Archive directories to compare.
    #[arg(required = true)]
    archives: Vec<PathBuf>,
    /// Directory for the coverage-over-time tables.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    stride: usize,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    archive: PathBuf,
    #[arg(long)]
    id: u64,
    /// Output file. Defaults to `render-<id>.<ext>` in the archive.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long)]
    archive: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: std::net::SocketAddr,
    /// Pending human jobs accepted before back-pressure.
    #[arg(long, default_value_t = 16)]
    queue: usize,
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    match s {
        "imgep" => Ok(Policy::Imgep),
        "random" => Ok(Policy::Random),
        _ => Err(format!("unknown policy {s:?}; expected imgep or random")),
    }
}

fn parse_experiment(s: &str) -> Result<ExperimentKind, String> {
    match s {
        "ecosystem" => Ok(ExperimentKind::Ecosystem),
        "movement" => Ok(ExperimentKind::Movement),
        _ => Err(format!("unknown experiment {s:?}; expected ecosystem or movement")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Explore(a) => explore_cmd(a),
        Command::Analyze(a) => report::analyze_cmd(&a.archives, a.out.as_deref(), a.stride),
        Command::Render(a) => render_cmd(a),
        Command::Serve(a) => serve_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

/// The external encoder wins when its environment variable is set.
fn pick_encoder(configured: &EncoderConfig) -> EncoderConfig {
    match std::env::var_os(ENCODER_ENV) {
        Some(v) if !v.is_empty() => EncoderConfig::from_env(),
        _ => configured.clone(),
    }
}

fn simulate_cmd(args: SimulateArgs) -> CliResult<()> {
    let (world, campaign) = match (&args.world, args.source.load()?) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read world config {}: {e}", path.display())))?;
            let cfg: WorldConfig =
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid world config: {e}")))?;
            (cfg, None)
        }
        (None, Some(campaign)) => {
            let space = campaign.search_space()?;
            let theta = space.sample(&mut stream(&[args.seed]));
            (space.world_config(&theta, &campaign.template, args.seed)?, Some(campaign))
        }
        (None, None) => return Err(CliError::Usage("one of --config, --preset or --world is required".into())),
    };
    let (experiment, recording, encoder) = match &campaign {
        Some(c) => (Some(c.experiment), c.recording, pick_encoder(&c.encoder)),
        None => (args.experiment, Default::default(), pick_encoder(&EncoderConfig::default())),
    };
    let record = simulate(&world, recording)?;
    std::fs::create_dir_all(&args.out)?;
    let encoded = if record.frames.is_empty() { None } else { Some(encode(&record.frames, &encoder)?) };
    let snapshot = Snapshot {
        step: record.steps_run,
        state: record.final_state.clone(),
        params: record.final_params.clone(),
    };
    write_file(&args.out.join("snapshot.bin"), &snapshot.to_bytes())?;
    write_file(&args.out.join("census.tsv"), record.census.to_tsv().as_bytes())?;
    if let Some(bytes) = &encoded {
        write_file(&args.out.join(format!("video.{}", encoder.extension())), bytes)?;
    }
    std::fs::write(args.out.join("world.toml"), toml::to_string_pretty(&world).expect("world config serializes"))?;
    if let Some(reason) = &record.divergence {
        return Err(CliError::Divergence(format!("run diverged at step {}: {reason}", record.steps_run)));
    }
    let empty = record.final_state.total_mass() <= 0.0 || record.census.samples.iter().all(|c| c.is_empty());
    let metrics = match experiment {
        Some(kind) if !empty => {
            descriptor_from_parts(&record, kind, encoded.as_ref().map(|b| b.len() as u64))?.map(|v| {
                serde_json::json!({
                    "experiment": kind,
                    "names": kind.goal_names(world.sim.grid_size),
                    "values": v.values,
                })
            })
        }
        _ => None,
    };
    let summary = serde_json::json!({
        "steps_run": record.steps_run,
        "total_mass": record.final_state.total_mass(),
        "max_step_drift": record.max_step_drift,
        "census_samples": record.census.len(),
        "empty_census": empty,
        "metrics": metrics,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(args.out.join("metrics.json"), format!("{text}\n"))?;
    if empty {
        println!("empty census: the world holds no matter; no metrics were computed");
    }
    println!("{text}");
    Ok(())
}

fn explore_cmd(args: ExploreArgs) -> CliResult<()> {
    let has_archive = args.out.join(LEDGER_FILE).exists();
    let (campaign, mut archive) = if args.resume {
        if !has_archive {
            return Err(CliError::Usage(format!("no archive to resume in {}", args.out.display())));
        }
        if args.source.config.is_some() || args.source.preset.is_some() || args.seed.is_some() || args.policy.is_some()
        {
            return Err(CliError::Usage("--resume uses the stored campaign; only --iterations and --jobs may change".into()));
        }
        let archive = ArchiveIndex::open(&args.out)?;
        let mut campaign = archive.meta().campaign.clone();
        if let Some(n) = args.iterations {
            campaign.iterations = n;
        }
        (campaign, archive)
    } else {
        if has_archive {
            return Err(CliError::Usage(format!(
                "{} already holds an archive; pass --resume to continue it",
                args.out.display()
            )));
        }
        let mut campaign = args
            .source
            .load()?
            .ok_or_else(|| CliError::Usage("one of --config or --preset is required".into()))?;
        if let Some(seed) = args.seed {
            campaign.seed = seed;
        }
        if let Some(policy) = args.policy {
            campaign.policy = policy;
        }
        if let Some(n) = args.iterations {
            campaign.iterations = n;
        }
        campaign.batch_width = args.jobs.unwrap_or_else(default_jobs);
        campaign.encoder = pick_encoder(&campaign.encoder);
        if args.no_artifacts {
            campaign.artifacts = ArtifactPolicy::none();
        }
        campaign.validate()?;
        let archive = ArchiveIndex::create(&args.out, ArchiveMeta::for_campaign(&campaign))?;
        (campaign, archive)
    };
    campaign.validate()?;
    let threads = args.jobs.unwrap_or(campaign.batch_width).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    pool.install(|| run_campaign(&campaign, &mut archive, None))?;
    let failures = archive.discoveries().iter().filter(|d| !d.succeeded()).count();
    println!("{} discoveries in {} ({} failed)", archive.len(), args.out.display(), failures);
    report::print_single(&archive)?;
    Ok(())
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn render_cmd(args: RenderArgs) -> CliResult<()> {
    let archive = ArchiveIndex::open_read_only(&args.archive)?;
    let discovery = archive
        .get(args.id)
        .ok_or_else(|| CliError::Usage(format!("no discovery {} in {}", args.id, args.archive.display())))?;
    let campaign = &archive.meta().campaign;
    let record = replay(campaign, discovery)?;
    if record.frames.is_empty() {
        return Err(CliError::Usage(format!("discovery {} produced no frames", args.id)));
    }
    let bytes = encode(&record.frames, &campaign.encoder)?;
    let out = args
        .out
        .unwrap_or_else(|| args.archive.join(format!("render-{:06}.{}", args.id, campaign.encoder.extension())));
    write_file(&out, &bytes)?;
    println!("{} ({} frames, {} bytes)", out.display(), record.frames.len(), bytes.len());
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

fn serve_cmd(args: ServeArgs) -> CliResult<()> {
    let archive = ArchiveIndex::open(&args.archive)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.addr).await?;
        eprintln!("serving {} on http://{}", args.archive.display(), listener.local_addr()?);
        flowlenia_server::serve(listener, archive, args.queue).await
    })?;
    Ok(())
}
