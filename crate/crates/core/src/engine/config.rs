use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global settings of one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Cells per side of the square toroidal lattice.
    pub grid_size: usize,
    pub channels: usize,
    pub dt: f64,
    pub steps: u64,
    /// Channel-sum density at which crowding diffusion fully takes over.
    pub theta_a: f64,
    /// Exponent of the crowding term.
    pub alpha_n: f64,
    /// Largest per-step displacement in cells.
    pub max_displacement: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            grid_size: 64,
            channels: 1,
            dt: 0.2,
            steps: 1000,
            theta_a: 2.0,
            alpha_n: 2.0,
            max_displacement: 1.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 8 {
            return Err(Error::config(format!(
                "grid_size must be at least 8, got {}",
                self.grid_size
            )));
        }
        if self.channels < 1 {
            return Err(Error::config("at least one channel is required"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.theta_a > 0.0 && self.theta_a.is_finite()) {
            return Err(Error::config(format!(
                "theta_a must be positive, got {}",
                self.theta_a
            )));
        }
        if !(self.alpha_n >= 1.0 && self.alpha_n.is_finite()) {
            return Err(Error::config(format!(
                "alpha_n must be >= 1, got {}",
                self.alpha_n
            )));
        }
        if !(self.max_displacement > 0.0 && self.max_displacement <= 1.0) {
            return Err(Error::config(format!(
                "max_displacement must lie in (0, 1], got {}",
                self.max_displacement
            )));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.grid_size * self.grid_size
    }
}
