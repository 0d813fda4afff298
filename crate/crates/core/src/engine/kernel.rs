//! Ring kernels and growth functions.
//!
//! A kernel profile is a sum of Gaussian rings over the normalized radius
//! `r / R`, truncated at `R` and normalized to unit mass:
//!
//! ```text
//! K(r) ∝ Σ_k b_k · exp(-(r/R - a_k)² / (2·w_k²)),   r <= R
//! ```
//!
//! Images are stored with the kernel center at cell `(0, 0)` and periodic
//! indexing, which is the layout FFT convolution on a torus expects.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One Gaussian ring of a kernel profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    /// Relative radius of the ring center, in (0, 1].
    pub a: f64,
    /// Ring width in relative-radius units.
    pub w: f64,
    /// Ring height in [0, 1].
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// Kernel radius in cells.
    pub radius: f64,
    pub rings: Vec<Ring>,
    /// Channel the kernel reads from.
    pub source: usize,
    /// Channel whose affinity the kernel contributes to.
    pub target: usize,
}

impl KernelSpec {
    pub fn validate(&self, grid_size: usize, channels: usize) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::config(format!(
                "kernel radius must be positive, got {}",
                self.radius
            )));
        }
        if self.radius >= grid_size as f64 / 2.0 {
            return Err(Error::config(format!(
                "kernel radius {} too large for a {grid_size}-cell grid",
                self.radius
            )));
        }
        if self.rings.is_empty() {
            return Err(Error::config("kernel needs at least one ring"));
        }
        for ring in &self.rings {
            if !(ring.a > 0.0 && ring.a <= 1.0) {
                return Err(Error::config(format!("ring center {} outside (0, 1]", ring.a)));
            }
            if !(ring.w > 0.0 && ring.w.is_finite()) {
                return Err(Error::config(format!("ring width {} must be positive", ring.w)));
            }
            if !(0.0..=1.0).contains(&ring.b) {
                return Err(Error::config(format!("ring height {} outside [0, 1]", ring.b)));
            }
        }
        if self.source >= channels || self.target >= channels {
            return Err(Error::config(format!(
                "kernel channels ({}, {}) out of range for {channels} channels",
                self.source, self.target
            )));
        }
        Ok(())
    }

    /// Unnormalized profile value at distance `r` (cells) from the center.
    pub fn profile(&self, r: f64) -> f64 {
        if r > self.radius {
            return 0.0;
        }
        let rel = r / self.radius;
        self.rings
            .iter()
            .map(|ring| {
                let d = rel - ring.a;
                ring.b * (-(d * d) / (2.0 * ring.w * ring.w)).exp()
            })
            .sum()
    }
}

/// Growth function `G(u) = 2·exp(-(u - mu)² / (2·sigma²)) - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSpec {
    pub mu: f64,
    pub sigma: f64,
}

impl GrowthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::config(format!("growth mu {} outside [0, 1]", self.mu)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config(format!("growth sigma {} must be positive", self.sigma)));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, u: f64) -> f64 {
        let d = u - self.mu;
        2.0 * (-(d * d) / (2.0 * self.sigma * self.sigma)).exp() - 1.0
    }
}

/// Rendered kernel on a `size × size` torus, centered at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelImage {
    size: usize,
    data: Vec<f64>,
}

impl KernelImage {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Weight at the signed offset `(dx, dy)` from the center.
    pub fn at_offset(&self, dx: isize, dy: isize) -> f64 {
        let n = self.size as isize;
        let x = dx.rem_euclid(n) as usize;
        let y = dy.rem_euclid(n) as usize;
        self.data[y * self.size + x]
    }
}

pub fn build_kernel(spec: &KernelSpec, grid_size: usize) -> Result<KernelImage> {
    if spec.radius >= grid_size as f64 / 2.0 {
        return Err(Error::config(format!(
            "kernel radius {} too large for a {grid_size}-cell grid",
            spec.radius
        )));
    }
    let n = grid_size as isize;
    let reach = spec.radius.floor() as isize;
    let mut data = vec![0.0; grid_size * grid_size];
    let mut total = 0.0;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let r = ((dx * dx + dy * dy) as f64).sqrt();
            let v = spec.profile(r);
            if v > 0.0 {
                let x = dx.rem_euclid(n) as usize;
                let y = dy.rem_euclid(n) as usize;
                data[y * grid_size + x] = v;
                total += v;
            }
        }
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::config("kernel profile has no mass on the lattice"));
    }
    data.iter_mut().for_each(|v| *v /= total);
    Ok(KernelImage { size: grid_size, data })
}
