//! The exploration loop and the random-search baseline.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::goals::GoalSpace;
use super::space::{DimensionOverride, LayoutKind, SearchSpace, SpaceConfig, SystemParams, WorldTemplate};
use crate::archive::{write_artifacts, ArchiveIndex, ArtifactPolicy, Branch, Discovery};
use crate::engine::{ObstaclePreset, SimConfig};
use crate::error::{Error, Result};
use crate::genome::{MixingRule, MutationConfig};
use crate::metrics::{encode, ExperimentKind, MetricVector};
use crate::metrics::{descriptor_from_parts, EncoderConfig};
use crate::rng::{stream, stream_seed};
use crate::run::{simulate, Recording, RunRecord};

const ITERATION_STREAM: u64 = 0x6974_6572;
const RUN_STREAM: u64 = 0x0072_756e;
const HUMAN_STREAM: u64 = 0x6875_6d61_6e;

pub const PROGRESS_FILE: &str = "progress.log";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Goal sampling plus mutation of the nearest discovery.
    Imgep,
    /// Every iteration samples parameters uniformly.
    Random,
}

fn default_bootstrap() -> usize {
    40
}

fn default_batch_width() -> usize {
    1
}

fn default_expansion() -> f64 {
    0.1
}

/// A complete, reproducible description of one exploration campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub experiment: ExperimentKind,
    pub policy: Policy,
    pub iterations: usize,
    /// Length of the uniform-sampling phase before goals are used.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    pub seed: u64,
    /// Iterations dispatched together against the same archive prefix.
    #[serde(default = "default_batch_width")]
    pub batch_width: usize,
    #[serde(default = "default_expansion")]
    pub goal_expansion: f64,
    pub template: WorldTemplate,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub recording: Recording,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub artifacts: ArtifactPolicy,
}

pub const PRESETS: [&str; 4] = ["ecosystem", "ecosystem-desk", "movement", "movement-desk"];

impl CampaignConfig {
    /// Named experiment presets. The `-desk` variants run 64×64 worlds for
    /// 1000 steps over 300 iterations.
    pub fn preset(name: &str) -> Result<Self> {
        let (experiment, desk) = match name {
            "ecosystem" => (ExperimentKind::Ecosystem, false),
            "ecosystem-desk" => (ExperimentKind::Ecosystem, true),
            "movement" => (ExperimentKind::Movement, false),
            "movement-desk" => (ExperimentKind::Movement, true),
            _ => {
                return Err(Error::config(format!(
                    "unknown preset {name:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        let (grid_size, steps, iterations) = if desk { (64, 1000, 300) } else { (256, 10_000, 2000) };
        let mut space = SpaceConfig::default();
        if experiment == ExperimentKind::Movement {
            // matter starts in the corner room of the maze
            let n = grid_size as f64;
            let center = (grid_size / 8) as f64 / n + 0.5 / n;
            space.layout_kinds = vec![LayoutKind::Noise];
            space.obstacle_presets = vec![ObstaclePreset::CornerMaze];
            space.overrides = vec![
                DimensionOverride { name: "init.center_x".into(), lo: center, hi: center, scale: None },
                DimensionOverride { name: "init.center_y".into(), lo: center, hi: center, scale: None },
                DimensionOverride { name: "init.extent".into(), lo: 0.08, hi: 0.2, scale: None },
            ];
        }
        let config = Self {
            experiment,
            policy: Policy::Imgep,
            iterations,
            bootstrap: default_bootstrap(),
            seed: 0,
            batch_width: default_batch_width(),
            goal_expansion: default_expansion(),
            template: WorldTemplate {
                sim: SimConfig { grid_size, steps, ..Default::default() },
                mixing_rule: MixingRule::Negotiation,
                mutation: MutationConfig::default(),
            },
            space,
            recording: Recording::default(),
            encoder: EncoderConfig::default(),
            artifacts: ArtifactPolicy::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.template.sim.validate()?;
        if self.bootstrap < 1 {
            return Err(Error::config("bootstrap length must be at least 1"));
        }
        if self.policy == Policy::Imgep && self.iterations < self.bootstrap {
            return Err(Error::config(format!(
                "iterations ({}) must be at least the bootstrap length ({})",
                self.iterations, self.bootstrap
            )));
        }
        if self.batch_width < 1 {
            return Err(Error::config("batch width must be at least 1"));
        }
        if !(self.goal_expansion >= 0.0 && self.goal_expansion.is_finite()) {
            return Err(Error::config("goal expansion must be finite and >= 0"));
        }
        if self.template.sim.grid_size < self.experiment.min_grid_size() {
            return Err(Error::config(format!(
                "the {:?} experiment needs a grid of at least {} cells",
                self.experiment,
                self.experiment.min_grid_size()
            )));
        }
        if self.recording.census_stride == 0 || self.recording.frame_stride == 0 {
            return Err(Error::config("recording strides must be at least 1"));
        }
        self.search_space()?;
        Ok(())
    }

    pub fn search_space(&self) -> Result<SearchSpace> {
        SearchSpace::new(&self.space, self.template.sim.grid_size)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(format!("invalid campaign config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("campaign config is always representable as TOML")
    }
}

/// Everything decided about an iteration before its simulation runs.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationPlan {
    pub id: u64,
    pub parent: Option<u64>,
    pub branch: Branch,
    pub theta: SystemParams,
    pub target: Option<Vec<f64>>,
    pub multiplier: f64,
    pub seed: u64,
    pub dispatch_archive_size: u64,
}

/// Decides iteration `id` from the archive prefix visible at dispatch.
pub fn plan_iteration(
    campaign: &CampaignConfig,
    space: &SearchSpace,
    prefix: &[Discovery],
    id: u64,
) -> Result<IterationPlan> {
    let mut rng = stream(&[campaign.seed, ITERATION_STREAM, id]);
    let seed = stream_seed(&[campaign.seed, RUN_STREAM, id]);
    let mut plan = IterationPlan {
        id,
        parent: None,
        branch: Branch::Bootstrap,
        theta: space.sample(&mut rng),
        target: None,
        multiplier: 1.0,
        seed,
        dispatch_archive_size: prefix.len() as u64,
    };
    if campaign.policy == Policy::Random {
        plan.branch = Branch::Random;
        return Ok(plan);
    }
    let successes: Vec<&Discovery> = prefix.iter().filter(|d| d.succeeded()).collect();
    if (id as usize) < campaign.bootstrap || successes.is_empty() {
        return Ok(plan);
    }
    let names = campaign.experiment.goal_names(campaign.template.sim.grid_size);
    let goals = GoalSpace::from_goals(
        names,
        campaign.goal_expansion,
        successes.iter().filter_map(|d| d.goal.as_deref()),
    );
    // the uniform draw above is discarded, but keeps the stream layout fixed
    let target = goals.sample_goal(&mut rng)?;
    let nearest = goals
        .nearest(&target, successes.iter().filter_map(|d| d.goal.as_deref()))
        .expect("at least one successful discovery");
    let parent = successes[nearest];
    plan.parent = Some(parent.id);
    plan.branch = Branch::Goal;
    plan.theta = space.perturb(&parent.theta, 1.0, &mut rng);
    plan.target = Some(target);
    Ok(plan)
}

/// Plans a mutation of a chosen discovery, as requested by a person.
pub fn plan_human_job(
    campaign: &CampaignConfig,
    space: &SearchSpace,
    archive: &[Discovery],
    parent: u64,
    multiplier: f64,
    overrides: &[(String, f64)],
) -> Result<IterationPlan> {
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(Error::invalid(format!("mutation multiplier must be positive, got {multiplier}")));
    }
    let parent_record = archive
        .get(parent as usize)
        .ok_or_else(|| Error::NotFound(format!("discovery {parent}")))?;
    let id = archive.len() as u64;
    let mut rng = stream(&[campaign.seed, HUMAN_STREAM, id]);
    let theta = space.perturb(&parent_record.theta, multiplier, &mut rng);
    let theta = space.with_overrides(&theta, overrides)?;
    Ok(IterationPlan {
        id,
        parent: Some(parent),
        branch: Branch::Human,
        theta,
        target: None,
        multiplier,
        seed: stream_seed(&[campaign.seed, HUMAN_STREAM, RUN_STREAM, id]),
        dispatch_archive_size: id,
    })
}

/// Runs the simulation of a plan and measures it. Simulation failures are
/// recorded on the returned discovery; only artifact I/O errors propagate.
pub fn execute_plan(
    campaign: &CampaignConfig,
    space: &SearchSpace,
    plan: IterationPlan,
    archive_dir: Option<&Path>,
) -> Result<Discovery> {
    let mut discovery = Discovery {
        id: plan.id,
        parent: plan.parent,
        branch: plan.branch,
        seed: plan.seed,
        theta: plan.theta,
        mutation_multiplier: plan.multiplier,
        target: plan.target,
        goal: None,
        failure: None,
        dispatch_archive_size: plan.dispatch_archive_size,
        steps_run: 0,
        artifacts: Default::default(),
    };
    let record = match space
        .world_config(&discovery.theta, &campaign.template, plan.seed)
        .and_then(|cfg| simulate(&cfg, campaign.recording))
    {
        Ok(r) => r,
        Err(e) => {
            discovery.failure = Some(e.to_string());
            return Ok(discovery);
        }
    };
    discovery.steps_run = record.steps_run;
    let (measured, encoded) = measure(campaign, &record);
    match measured {
        Ok(Some(v)) => discovery.goal = Some(v.values),
        Ok(None) => {
            discovery.failure = Some(record.divergence.clone().unwrap_or_else(|| "non-finite descriptor".into()))
        }
        Err(e) => discovery.failure = Some(e.to_string()),
    }
    if let Some(dir) = archive_dir {
        discovery.artifacts = write_artifacts(
            dir,
            plan.id,
            &record,
            encoded.as_deref(),
            &campaign.encoder,
            campaign.artifacts,
        )?;
    }
    Ok(discovery)
}

fn measure(campaign: &CampaignConfig, record: &RunRecord) -> (Result<Option<MetricVector>>, Option<Vec<u8>>) {
    let wants_video = campaign.artifacts.video && !record.frames.is_empty();
    let needs_bytes = campaign.experiment == ExperimentKind::Ecosystem && !record.diverged();
    let encoded = if wants_video || needs_bytes { Some(encode(&record.frames, &campaign.encoder)) } else { None };
    let (bytes, err) = match encoded {
        Some(Ok(b)) => (Some(b), None),
        Some(Err(e)) => (None, Some(e)),
        None => (None, None),
    };
    if let (Some(e), true) = (err, needs_bytes) {
        return (Err(e), None);
    }
    let size = bytes.as_ref().map(|b| b.len() as u64);
    (descriptor_from_parts(record, campaign.experiment, size), bytes)
}

/// Re-runs a stored discovery from its parameters and seed.
pub fn replay(campaign: &CampaignConfig, discovery: &Discovery) -> Result<RunRecord> {
    let space = campaign.search_space()?;
    let cfg = space.world_config(&discovery.theta, &campaign.template, discovery.seed)?;
    simulate(&cfg, campaign.recording)
}

/// Runs and appends iteration `archive.len()`.
pub fn run_iteration(campaign: &CampaignConfig, archive: &mut ArchiveIndex) -> Result<Discovery> {
    let space = campaign.search_space()?;
    let id = archive.len() as u64;
    let dispatch = dispatch_prefix(campaign, id);
    let plan = plan_iteration(campaign, &space, &archive.discoveries()[..dispatch], id)?;
    let discovery = execute_plan(campaign, &space, plan, Some(archive.dir()))?;
    archive.append(discovery.clone())?;
    Ok(discovery)
}

/// Archive prefix visible to iteration `id`: everything before its batch.
pub fn dispatch_prefix(campaign: &CampaignConfig, id: u64) -> usize {
    let w = campaign.batch_width as u64;
    ((id / w) * w) as usize
}

/// Continues a campaign until the archive holds `campaign.iterations`
/// discoveries or `stop` is raised. Batches run on the current rayon pool.
pub fn run_campaign(campaign: &CampaignConfig, archive: &mut ArchiveIndex, stop: Option<&AtomicBool>) -> Result<()> {
    campaign.validate()?;
    let space = campaign.search_space()?;
    let mut progress = OpenOptions::new()
        .create(true)
        .append(true)
        .open(archive.dir().join(PROGRESS_FILE))?;
    while archive.len() < campaign.iterations {
        if stop.is_some_and(|s| s.load(Ordering::SeqCst)) {
            break;
        }
        let start = archive.len() as u64;
        let dispatch = dispatch_prefix(campaign, start);
        let end = ((dispatch + campaign.batch_width) as u64).min(campaign.iterations as u64);
        let prefix = &archive.discoveries()[..dispatch];
        let dir = archive.dir().to_path_buf();
        let began = Instant::now();
        let results: Vec<Result<Discovery>> = (start..end)
            .into_par_iter()
            .map(|id| {
                let plan = plan_iteration(campaign, &space, prefix, id)?;
                execute_plan(campaign, &space, plan, Some(&dir))
            })
            .collect();
        let elapsed = began.elapsed();
        for result in results {
            let d = result?;
            writeln!(progress, "{}", progress_line(&d, elapsed.as_secs_f64()))?;
            archive.append(d)?;
        }
        progress.flush()?;
    }
    Ok(())
}

fn progress_line(d: &Discovery, wall_seconds: f64) -> String {
    let fmt = |v: &Option<Vec<f64>>| match v {
        Some(v) => v.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(","),
        None => "-".into(),
    };
    format!(
        "id={} parent={} branch={:?} target={} achieved={} failure={} wall_s={:.3}",
        d.id,
        d.parent.map_or("-".into(), |p| p.to_string()),
        d.branch,
        fmt(&d.target),
        fmt(&d.goal),
        d.failure.as_deref().unwrap_or("-"),
        wall_seconds
    )
}
