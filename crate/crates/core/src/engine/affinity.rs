//! Growth fields and the localized affinity map.

use serde::{Deserialize, Serialize};

use super::convolution::Convolver;
use super::kernel::{build_kernel, GrowthSpec, KernelSpec};
use super::state::GridState;
use crate::error::{Error, Result};
use crate::genome::ParameterMap;

/// Kernel/growth pairs of a world. Index `i` of both lists belongs together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rules {
    pub kernels: Vec<KernelSpec>,
    pub growths: Vec<GrowthSpec>,
}

impl Rules {
    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn validate(&self, grid_size: usize, channels: usize) -> Result<()> {
        if self.kernels.len() != self.growths.len() {
            return Err(Error::config(format!(
                "{} kernels but {} growth functions",
                self.kernels.len(),
                self.growths.len()
            )));
        }
        if self.kernels.is_empty() {
            return Err(Error::config("at least one kernel is required"));
        }
        for k in &self.kernels {
            k.validate(grid_size, channels)?;
        }
        for g in &self.growths {
            g.validate()?;
        }
        Ok(())
    }
}

/// `G_i(K_i * A_{source_i})` for every kernel `i`, stored cell-major so the
/// per-cell weighted sums read contiguous memory.
#[derive(Clone, Debug)]
pub struct GrowthFields {
    size: usize,
    kernels: usize,
    values: Vec<f64>,
}

impl GrowthFields {
    /// Growth values of every kernel at one cell.
    #[inline]
    pub fn at(&self, cell: usize) -> &[f64] {
        &self.values[cell * self.kernels..(cell + 1) * self.kernels]
    }

    /// One kernel's field, copied out.
    pub fn kernel(&self, i: usize) -> Vec<f64> {
        self.values.iter().skip(i).step_by(self.kernels).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.kernels
    }

    pub fn is_empty(&self) -> bool {
        self.kernels == 0
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// Per-cell, per-channel affinity, channel-major like [`GridState`].
#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMap {
    size: usize,
    channels: usize,
    values: Vec<f64>,
}

impl AffinityMap {
    pub fn from_parts(size: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != size * size * channels {
            return Err(Error::invalid("affinity buffer does not match the declared shape"));
        }
        Ok(Self { size, channels, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n2 = self.size * self.size;
        &self.values[c * n2..(c + 1) * n2]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Rendered kernels plus their spectra for one lattice.
#[derive(Clone, Debug)]
pub struct Dynamics {
    rules: Rules,
    convolver: Convolver,
    channels: usize,
}

impl Dynamics {
    pub fn new(rules: Rules, grid_size: usize, channels: usize) -> Result<Self> {
        rules.validate(grid_size, channels)?;
        let images = rules
            .kernels
            .iter()
            .map(|k| build_kernel(k, grid_size))
            .collect::<Result<Vec<_>>>()?;
        let convolver = Convolver::new(grid_size, &images);
        Ok(Self { rules, convolver, channels })
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    pub fn kernel_count(&self) -> usize {
        self.rules.len()
    }

    pub fn growth_fields(&self, state: &GridState) -> GrowthFields {
        let n = state.size();
        let n2 = n * n;
        let walls = state.has_walls();
        let spectra: Vec<Option<Vec<_>>> = (0..self.channels)
            .map(|c| {
                if !self.rules.kernels.iter().any(|k| k.source == c) {
                    return None;
                }
                let src = state.channel(c);
                Some(if walls {
                    let masked: Vec<f64> = src
                        .iter()
                        .zip(state.obstacles())
                        .map(|(&m, &w)| if w { 0.0 } else { m })
                        .collect();
                    self.convolver.field_spectrum(&masked)
                } else {
                    self.convolver.field_spectrum(src)
                })
            })
            .collect();
        let spectrum = |i: usize| spectra[self.rules.kernels[i].source].as_deref().expect("source spectrum");

        let mut work = Vec::with_capacity(n2);
        let mut scratch = Vec::new();
        let k = self.rules.len();
        let mut fields = vec![vec![0.0; n2]; k];
        let mut i = 0;
        while i < k {
            if i + 1 < k {
                let (head, tail) = fields.split_at_mut(i + 1);
                self.convolver.convolve_pair(
                    (i, spectrum(i)),
                    (i + 1, spectrum(i + 1)),
                    &mut head[i],
                    &mut tail[0],
                    &mut work,
                    &mut scratch,
                );
                i += 2;
            } else {
                self.convolver
                    .convolve_spectrum(i, spectrum(i), &mut fields[i], &mut work, &mut scratch);
                i += 1;
            }
        }
        let mut values = vec![0.0; n2 * k];
        for (i, (field, growth)) in fields.iter().zip(&self.rules.growths).enumerate() {
            for (cell, &u) in field.iter().enumerate() {
                values[cell * k + i] = growth.apply(u);
            }
        }
        GrowthFields { size: n, kernels: k, values }
    }

    /// `U_j(x) = Σ_i P_i(x) · G_i(K_i * A_{c0_i})(x) · [c1_i = j]`, zero on walls.
    pub fn affinity(
        &self,
        growth: &GrowthFields,
        params: &ParameterMap,
        obstacles: &[bool],
    ) -> Result<AffinityMap> {
        if params.dim() != self.rules.len() {
            return Err(Error::config(format!(
                "parameter dimension {} does not match {} kernels",
                params.dim(),
                self.rules.len()
            )));
        }
        let n = growth.size;
        let n2 = n * n;
        let mut values = vec![0.0; n2 * self.channels];
        if self.channels == 1 {
            for (cell, out) in values.iter_mut().enumerate() {
                if obstacles[cell] {
                    continue;
                }
                let g = growth.at(cell);
                for (h, g) in params.weights_at(cell).iter().zip(g) {
                    *out += h * g;
                }
            }
        } else {
            for cell in 0..n2 {
                if obstacles[cell] {
                    continue;
                }
                let (h, g) = (params.weights_at(cell), growth.at(cell));
                for (i, kernel) in self.rules.kernels.iter().enumerate() {
                    values[kernel.target * n2 + cell] += h[i] * g[i];
                }
            }
        }
        AffinityMap::from_parts(n, self.channels, values)
    }
}

/// Standalone affinity evaluation: builds the kernels and convolves once.
pub fn compute_affinity(
    state: &GridState,
    params: &ParameterMap,
    kernels: &[KernelSpec],
    growths: &[GrowthSpec],
) -> Result<AffinityMap> {
    if kernels.len() != growths.len() || kernels.len() != params.dim() {
        return Err(Error::config(format!(
            "length mismatch: {} kernels, {} growths, parameter dimension {}",
            kernels.len(),
            growths.len(),
            params.dim()
        )));
    }
    let rules = Rules { kernels: kernels.to_vec(), growths: growths.to_vec() };
    let dynamics = Dynamics::new(rules, state.size(), state.channels())?;
    let growth = dynamics.growth_fields(state);
    dynamics.affinity(&growth, params, state.obstacles())
}
