//! The explored parameter space and its samplers.
//!
//! A system is described by a flat vector of continuous values, one per
//! [`Dimension`], plus two structural choices (initial layout kind and wall
//! preset). Kernel rings, growth bumps, the initial `h` and `Q` vectors,
//! global dynamics scalars and initial matter placement are all dimensions.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::engine::{GrowthSpec, InitLayout, KernelSpec, ObstaclePreset, Ring, Rules, SimConfig, WorldConfig};
use crate::error::{Error, Result};
use crate::genome::{MixingConfig, MutationConfig};

pub const RINGS_PER_KERNEL: usize = 3;
/// Values per kernel: relative radius, three `(a, w, b)` rings, `mu`, `sigma`.
pub const KERNEL_BLOCK: usize = 1 + 3 * RINGS_PER_KERNEL + 2;
const GLOBALS: [&str; 3] = ["theta_a", "beta", "mutation_sigma"];
const LAYOUT: [&str; 6] = ["init.center_x", "init.center_y", "init.extent", "init.density", "init.blob_count", "init.blob_radius"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    /// Standard deviation of the mutation noise.
    pub scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutKind {
    Noise,
    Blobs,
}

/// Replaces the bounds (and optionally the scale) of one named dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionOverride {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub scale: Option<f64>,
}

/// How a campaign's search space is derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceConfig {
    pub kernel_count: usize,
    /// Kernel radius at relative radius 1, in cells. `None` means `grid_size / 6`.
    pub base_radius: Option<f64>,
    /// Default mutation scale as a fraction of each dimension's range.
    pub mutation_fraction: f64,
    /// Probability of resampling each structural choice during mutation.
    pub structural_resample: f64,
    pub layout_kinds: Vec<LayoutKind>,
    pub obstacle_presets: Vec<ObstaclePreset>,
    pub overrides: Vec<DimensionOverride>,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self {
            kernel_count: 10,
            base_radius: None,
            mutation_fraction: 0.1,
            structural_resample: 0.05,
            layout_kinds: vec![LayoutKind::Noise, LayoutKind::Blobs],
            obstacle_presets: vec![ObstaclePreset::None],
            overrides: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub kernel_count: usize,
    pub base_radius: f64,
    pub dims: Vec<Dimension>,
    pub layout_kinds: Vec<LayoutKind>,
    pub obstacle_presets: Vec<ObstaclePreset>,
    pub structural_resample: f64,
}

/// One point of the search space: the full description of a system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub values: Vec<f64>,
    pub layout: LayoutKind,
    pub obstacles: ObstaclePreset,
}

impl SearchSpace {
    pub fn new(config: &SpaceConfig, grid_size: usize) -> Result<Self> {
        let k = config.kernel_count;
        if k == 0 {
            return Err(Error::config("the search space needs at least one kernel"));
        }
        if config.layout_kinds.is_empty() || config.obstacle_presets.is_empty() {
            return Err(Error::config("layout kinds and obstacle presets must not be empty"));
        }
        if !(0.0..=1.0).contains(&config.structural_resample) {
            return Err(Error::config("structural_resample must lie in [0, 1]"));
        }
        if !(config.mutation_fraction >= 0.0 && config.mutation_fraction.is_finite()) {
            return Err(Error::config("mutation_fraction must be finite and >= 0"));
        }
        let base_radius = config.base_radius.unwrap_or(grid_size as f64 / 6.0);
        if !(base_radius >= 1.0 && base_radius < grid_size as f64 / 2.0) {
            return Err(Error::config(format!(
                "base radius {base_radius} must lie in [1, {})",
                grid_size / 2
            )));
        }

        let mut dims = Vec::new();
        let mut push = |name: String, lo: f64, hi: f64| dims.push(Dimension { name, lo, hi, scale: 0.0 });
        for i in 0..k {
            push(format!("k{i}.r"), 0.2, 1.0);
            for j in 0..RINGS_PER_KERNEL {
                push(format!("k{i}.a{j}"), 0.01, 1.0);
                push(format!("k{i}.w{j}"), 0.01, 0.5);
                push(format!("k{i}.b{j}"), 0.001, 1.0);
            }
            push(format!("k{i}.mu"), 0.05, 0.5);
            push(format!("k{i}.sigma"), 0.001, 0.18);
        }
        for i in 0..k {
            push(format!("h{i}"), 0.01, 1.0);
        }
        for i in 0..k {
            push(format!("q{i}"), -1.0, 1.0);
        }
        push(GLOBALS[0].into(), 0.5, 4.0);
        push(GLOBALS[1].into(), 0.0, 5.0);
        push(GLOBALS[2].into(), 0.0, 0.2);
        push(LAYOUT[0].into(), 0.2, 0.8);
        push(LAYOUT[1].into(), 0.2, 0.8);
        push(LAYOUT[2].into(), 0.2, 0.7);
        push(LAYOUT[3].into(), 0.1, 1.0);
        push(LAYOUT[4].into(), 1.0, 8.0);
        push(LAYOUT[5].into(), 0.04, 0.15);
        for d in dims.iter_mut() {
            d.scale = config.mutation_fraction * (d.hi - d.lo);
        }

        for o in &config.overrides {
            let dim = dims
                .iter_mut()
                .find(|d| d.name == o.name)
                .ok_or_else(|| Error::config(format!("unknown search dimension {:?}", o.name)))?;
            if !(o.lo.is_finite() && o.hi.is_finite() && o.lo <= o.hi) {
                return Err(Error::config(format!("invalid bounds for {}", o.name)));
            }
            dim.lo = o.lo;
            dim.hi = o.hi;
            dim.scale = o.scale.unwrap_or(config.mutation_fraction * (o.hi - o.lo));
            if !(dim.scale >= 0.0 && dim.scale.is_finite()) {
                return Err(Error::config(format!("invalid scale for {}", o.name)));
            }
        }

        Ok(Self {
            kernel_count: k,
            base_radius,
            dims,
            layout_kinds: config.layout_kinds.clone(),
            obstacle_presets: config.obstacle_presets.clone(),
            structural_resample: config.structural_resample,
        })
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    pub fn contains(&self, theta: &SystemParams) -> bool {
        theta.values.len() == self.dims.len()
            && theta.values.iter().zip(&self.dims).all(|(v, d)| (d.lo..=d.hi).contains(v))
            && self.layout_kinds.contains(&theta.layout)
            && self.obstacle_presets.contains(&theta.obstacles)
    }

    /// Uniform draw over every dimension and structural choice.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SystemParams {
        let values = self
            .dims
            .iter()
            .map(|d| if d.hi > d.lo { rng.random_range(d.lo..=d.hi) } else { d.lo })
            .collect();
        SystemParams {
            values,
            layout: pick(&self.layout_kinds, rng),
            obstacles: pick(&self.obstacle_presets, rng),
        }
    }

    /// Gaussian perturbation with each dimension's scale times `multiplier`,
    /// clipped to bounds; structural choices are resampled with the
    /// configured probability.
    pub fn perturb<R: Rng + ?Sized>(&self, theta: &SystemParams, multiplier: f64, rng: &mut R) -> SystemParams {
        let values = theta
            .values
            .iter()
            .zip(&self.dims)
            .map(|(&v, d)| {
                let z: f64 = StandardNormal.sample(rng);
                (v + z * d.scale * multiplier).clamp(d.lo, d.hi)
            })
            .collect();
        let mut layout = theta.layout;
        if rng.random::<f64>() < self.structural_resample {
            layout = pick(&self.layout_kinds, rng);
        }
        let mut obstacles = theta.obstacles;
        if rng.random::<f64>() < self.structural_resample {
            obstacles = pick(&self.obstacle_presets, rng);
        }
        SystemParams { values, layout, obstacles }
    }

    /// Applies named value overrides, clipping to bounds.
    pub fn with_overrides(&self, theta: &SystemParams, overrides: &[(String, f64)]) -> Result<SystemParams> {
        let mut out = theta.clone();
        for (name, value) in overrides {
            let i = self
                .index_of(name)
                .ok_or_else(|| Error::invalid(format!("unknown parameter {name:?}")))?;
            if !value.is_finite() {
                return Err(Error::invalid(format!("override for {name} is not finite")));
            }
            out.values[i] = value.clamp(self.dims[i].lo, self.dims[i].hi);
        }
        Ok(out)
    }

    /// Builds the simulation described by `theta`.
    pub fn world_config(&self, theta: &SystemParams, base: &WorldTemplate, seed: u64) -> Result<WorldConfig> {
        if theta.values.len() != self.dims.len() {
            return Err(Error::invalid(format!(
                "parameter vector has {} values, the space has {} dimensions",
                theta.values.len(),
                self.dims.len()
            )));
        }
        let k = self.kernel_count;
        let v = &theta.values;
        let channels = base.sim.channels;
        let max_radius = (base.sim.grid_size as f64 / 2.0 - 1.0).max(1.0);
        let mut kernels = Vec::with_capacity(k);
        let mut growths = Vec::with_capacity(k);
        for i in 0..k {
            let b = &v[i * KERNEL_BLOCK..(i + 1) * KERNEL_BLOCK];
            let rings = (0..RINGS_PER_KERNEL)
                .map(|j| Ring { a: b[1 + 3 * j], w: b[2 + 3 * j], b: b[3 + 3 * j] })
                .collect();
            kernels.push(KernelSpec {
                radius: (self.base_radius * b[0]).clamp(1.0, max_radius),
                rings,
                source: i % channels,
                target: (i / channels) % channels,
            });
            growths.push(GrowthSpec { mu: b[10], sigma: b[11] });
        }
        let h = v[k * KERNEL_BLOCK..k * KERNEL_BLOCK + k].to_vec();
        let q = v[k * KERNEL_BLOCK + k..k * KERNEL_BLOCK + 2 * k].to_vec();
        let g = k * KERNEL_BLOCK + 2 * k;
        let (theta_a, beta, mutation_sigma) = (v[g], v[g + 1], v[g + 2]);
        let l = &v[g + 3..g + 3 + LAYOUT.len()];
        let init = match theta.layout {
            LayoutKind::Noise => InitLayout::Noise { center_x: l[0], center_y: l[1], extent: l[2], density: l[3] },
            LayoutKind::Blobs => InitLayout::Blobs {
                count: l[4].round().max(1.0) as usize,
                radius: l[5],
                density: l[3],
            },
        };
        let config = WorldConfig {
            sim: SimConfig { theta_a, seed, ..base.sim.clone() },
            rules: Rules { kernels, growths },
            mixing: MixingConfig { rule: base.mixing_rule, beta },
            mutation: MutationConfig { sigma: vec![mutation_sigma], ..base.mutation.clone() },
            initial_weights: h,
            initial_mixing: q,
            obstacles: theta.obstacles,
            init,
        };
        config.validate()?;
        Ok(config)
    }
}

fn pick<T: Copy, R: Rng + ?Sized>(options: &[T], rng: &mut R) -> T {
    options[rng.random_range(0..options.len())]
}

/// The parts of a world that exploration does not vary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldTemplate {
    pub sim: SimConfig,
    pub mixing_rule: crate::genome::MixingRule,
    /// Period, patch count and radius; the noise scale comes from the
    /// explored parameters.
    pub mutation: MutationConfig,
}
