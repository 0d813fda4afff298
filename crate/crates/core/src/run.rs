//! Running one world end to end while sampling the census and frames.

use serde::{Deserialize, Serialize};

use crate::engine::{GridState, World, WorldConfig};
use crate::error::Result;
use crate::genome::ParameterMap;
use crate::metrics::{population_census, render_frame, FrameSequence, PopulationSeries};

/// Sampling strides used while recording a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Recording {
    pub census_stride: u64,
    pub frame_stride: u64,
}

impl Default for Recording {
    fn default() -> Self {
        Self { census_stride: 50, frame_stride: 25 }
    }
}

/// Outcome of one simulation.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub steps_run: u64,
    pub final_state: GridState,
    pub final_params: ParameterMap,
    pub census: PopulationSeries,
    pub frames: FrameSequence,
    /// Why the run stopped early, if it did.
    pub divergence: Option<String>,
    /// Largest per-step relative mass drift over any channel.
    pub max_step_drift: f64,
}

impl RunRecord {
    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }
}

/// Builds the world and runs it for `config.sim.steps` steps. Divergence
/// stops the run and is reported in the record; configuration errors are
/// returned.
pub fn simulate(config: &WorldConfig, recording: Recording) -> Result<RunRecord> {
    let world = World::new(config.clone())?;
    Ok(continue_run(world, config.sim.steps, recording))
}

/// Runs an existing world until its step counter reaches `until`.
pub fn continue_run(mut world: World, until: u64, recording: Recording) -> RunRecord {
    let census_stride = recording.census_stride.max(1);
    let frame_stride = recording.frame_stride.max(1);
    let mut census = PopulationSeries::new(census_stride);
    let mut frames = FrameSequence::new(frame_stride);
    let mut max_step_drift = 0.0f64;
    let mut divergence = None;

    let sample = |world: &World, census: &mut PopulationSeries, frames: &mut FrameSequence| {
        let step = world.step_count();
        if step % census_stride == 0 {
            census
                .push(step, population_census(world.state(), world.params()))
                .expect("census steps increase");
        }
        if step % frame_stride == 0 {
            frames.push(render_frame(world.state(), world.params()));
        }
    };

    sample(&world, &mut census, &mut frames);
    while world.step_count() < until {
        match world.step() {
            Ok(report) => {
                max_step_drift = max_step_drift.max(report.max_relative_drift());
                sample(&world, &mut census, &mut frames);
            }
            Err(e) => {
                divergence = Some(e.to_string());
                break;
            }
        }
    }
    let steps_run = world.step_count();
    RunRecord {
        steps_run,
        final_state: world.state().clone(),
        final_params: world.params().clone(),
        census,
        frames,
        divergence,
        max_step_drift,
    }
}
