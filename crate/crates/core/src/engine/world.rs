use serde::{Deserialize, Serialize};

use super::affinity::{Dynamics, Rules};
use super::config::SimConfig;
use super::flow::compute_flow;
use super::layout::{InitLayout, ObstaclePreset};
use super::state::GridState;
use super::transport::advect;
use crate::error::{Error, Result};
use crate::genome::{mutate_map, resolve_mixing, MixingConfig, MutationConfig, ParameterMap};
use crate::rng::stream;

/// Largest per-step relative mass change tolerated before a run is
/// declared divergent.
pub const DIVERGENCE_DRIFT: f64 = 1e-6;

/// Everything needed to build a world from scratch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    pub sim: SimConfig,
    pub rules: Rules,
    #[serde(default)]
    pub mixing: MixingConfig,
    #[serde(default)]
    pub mutation: MutationConfig,
    /// Kernel weights `h` every cell starts with.
    pub initial_weights: Vec<f64>,
    /// Mixing weights `q` every cell starts with.
    pub initial_mixing: Vec<f64>,
    #[serde(default)]
    pub obstacles: ObstaclePreset,
    #[serde(default)]
    pub init: InitLayout,
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.rules.validate(self.sim.grid_size, self.sim.channels)?;
        self.mixing.validate()?;
        self.mutation.validate(self.rules.len())?;
        self.init.validate()?;
        if self.initial_weights.len() != self.rules.len() || self.initial_mixing.len() != self.rules.len() {
            return Err(Error::config(format!(
                "initial parameter vectors must have one entry per kernel ({})",
                self.rules.len()
            )));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: WorldConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("invalid world config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("world config is always representable as TOML")
    }
}

/// Mass bookkeeping of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub mass_before: Vec<f64>,
    pub mass_after: Vec<f64>,
    pub mutated: bool,
}

impl StepReport {
    /// Largest per-channel `|after - before| / before`.
    pub fn max_relative_drift(&self) -> f64 {
        self.mass_before
            .iter()
            .zip(&self.mass_after)
            .map(|(&b, &a)| if b > 0.0 { ((a - b) / b).abs() } else { a.abs() })
            .fold(0.0, f64::max)
    }
}

const MUTATION_STREAM: u64 = 0x6d75_7461_7465;

/// A running simulation: matter, parameters and the step counter.
///
/// All randomness is derived from `(seed, step)` so a world can be
/// snapshotted and resumed, or moved between threads, without carrying RNG
/// state.
#[derive(Clone, Debug)]
pub struct World {
    config: WorldConfig,
    dynamics: Dynamics,
    state: GridState,
    params: ParameterMap,
    step: u64,
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self> {
        config.validate()?;
        let n = config.sim.grid_size;
        let mut state = GridState::empty(n, config.sim.channels);
        state.set_obstacles(config.obstacles.mask(n))?;
        config.init.apply(&mut state, config.sim.seed);
        let params = ParameterMap::uniform(n * n, &config.initial_weights, &config.initial_mixing)?;
        Self::from_parts(config, state, params, 0)
    }

    pub fn from_parts(config: WorldConfig, state: GridState, params: ParameterMap, step: u64) -> Result<Self> {
        config.validate()?;
        if state.size() != config.sim.grid_size || state.channels() != config.sim.channels {
            return Err(Error::config("state shape does not match the configuration"));
        }
        if params.cells() != state.cells() || params.dim() != config.rules.len() {
            return Err(Error::config("parameter map shape does not match the configuration"));
        }
        let dynamics = Dynamics::new(config.rules.clone(), config.sim.grid_size, config.sim.channels)?;
        Ok(Self { config, dynamics, state, params, step })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn state(&self) -> &GridState {
        &self.state
    }

    pub fn params(&self) -> &ParameterMap {
        &self.params
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    /// affinity → flow → transport → mixing → scheduled mutation.
    pub fn step(&mut self) -> Result<StepReport> {
        let cfg = &self.config.sim;
        let mass_before = self.state.channel_masses();

        let growth = self.dynamics.growth_fields(&self.state);
        let affinity = self.dynamics.affinity(&growth, &self.params, self.state.obstacles())?;
        if !affinity.is_finite() {
            return Err(Error::Divergence(format!("non-finite affinity at step {}", self.step)));
        }
        let flow = compute_flow(&affinity, &self.state, cfg);
        let (next, transfer) = advect(&self.state, &flow, cfg);

        let mut params = resolve_mixing(
            &self.params,
            &self.state,
            &transfer,
            &growth,
            &self.config.mixing,
            cfg.seed,
            self.step,
        )?;

        self.step += 1;
        let mutated = self.step % self.config.mutation.period == 0 && self.config.mutation.patch_count > 0;
        if mutated {
            let mut rng = stream(&[cfg.seed, MUTATION_STREAM, self.step]);
            mutate_map(&mut params, &self.config.mutation, cfg.grid_size, &mut rng);
        }

        if !next.is_finite() {
            return Err(Error::Divergence(format!("non-finite density at step {}", self.step)));
        }
        let mass_after = next.channel_masses();
        let report = StepReport { step: self.step, mass_before, mass_after, mutated };
        let drift = report.max_relative_drift();
        if drift > DIVERGENCE_DRIFT {
            return Err(Error::Divergence(format!(
                "relative mass drift {drift:e} at step {}",
                self.step
            )));
        }
        self.state = next;
        self.params = params;
        Ok(report)
    }
}
