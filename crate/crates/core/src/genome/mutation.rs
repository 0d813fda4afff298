use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ParameterMap;
use crate::error::{Error, Result};

/// Periodic Gaussian mutation of disc-shaped patches of the parameter map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MutationConfig {
    /// Steps between mutation events.
    pub period: u64,
    pub patch_count: usize,
    /// Patch radius in cells; `None` means `grid_size / 16`.
    pub patch_radius: Option<f64>,
    /// Per-dimension noise scale. A single entry applies to every dimension.
    pub sigma: Vec<f64>,
    /// Clipping range for both `h` and `q`.
    pub bounds: (f64, f64),
}

impl Default for MutationConfig {
    fn default() -> Self {
        Self {
            period: 50,
            patch_count: 4,
            patch_radius: None,
            sigma: vec![0.05],
            bounds: (-1.0, 1.0),
        }
    }
}

impl MutationConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.period < 1 {
            return Err(Error::config("mutation period must be at least 1"));
        }
        if self.sigma.is_empty() || (self.sigma.len() != 1 && self.sigma.len() != dim) {
            return Err(Error::config(format!(
                "mutation sigma needs 1 or {dim} entries, got {}",
                self.sigma.len()
            )));
        }
        if self.sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::config("mutation sigma entries must be finite and >= 0"));
        }
        if !(self.bounds.0.is_finite() && self.bounds.1.is_finite() && self.bounds.0 <= self.bounds.1) {
            return Err(Error::config("mutation bounds must be a finite, ordered pair"));
        }
        if let Some(r) = self.patch_radius {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::config("patch radius must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn radius(&self, grid_size: usize) -> f64 {
        self.patch_radius.unwrap_or(grid_size as f64 / 16.0)
    }

    fn sigma_at(&self, i: usize) -> f64 {
        if self.sigma.len() == 1 {
            self.sigma[0]
        } else {
            self.sigma[i]
        }
    }
}

/// Applies one mutation event in place.
///
/// Each of the `patch_count` discs draws one noise vector for `h` and an
/// independent one for `q`; every cell of the disc shifts by the same
/// vectors, then values are clipped. Cells outside every disc are untouched.
pub fn mutate_map<R: Rng + ?Sized>(
    map: &mut ParameterMap,
    config: &MutationConfig,
    grid_size: usize,
    rng: &mut R,
) {
    let dim = map.dim();
    let radius = config.radius(grid_size);
    let reach = radius.floor() as isize;
    let r2 = radius * radius;
    let (lo, hi) = config.bounds;
    let n = grid_size as isize;

    for _ in 0..config.patch_count {
        let cx = rng.random_range(0..grid_size) as isize;
        let cy = rng.random_range(0..grid_size) as isize;
        let noise = |rng: &mut R| -> Vec<f64> {
            (0..dim)
                .map(|i| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * config.sigma_at(i)
                })
                .collect()
        };
        let eps_h = noise(rng);
        let eps_q = noise(rng);
        if eps_h.iter().chain(&eps_q).all(|&e| e == 0.0) {
            continue;
        }
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if (dx * dx + dy * dy) as f64 > r2 {
                    continue;
                }
                let x = (cx + dx).rem_euclid(n) as usize;
                let y = (cy + dy).rem_euclid(n) as usize;
                let cell = y * grid_size + x;
                for (v, e) in map.weights_at_mut(cell).iter_mut().zip(&eps_h) {
                    *v = (*v + e).clamp(lo, hi);
                }
                for (v, e) in map.mixing_at_mut(cell).iter_mut().zip(&eps_q) {
                    *v = (*v + e).clamp(lo, hi);
                }
            }
        }
    }
}
