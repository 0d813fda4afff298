use crate::error::{Error, Result};
use crate::sum::compensated_sum;

/// Matter densities on a toroidal lattice, plus the wall mask.
///
/// Densities are stored channel-major: `mass[c * n * n + y * n + x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    size: usize,
    channels: usize,
    mass: Vec<f64>,
    obstacles: Vec<bool>,
}

impl GridState {
    pub fn empty(size: usize, channels: usize) -> Self {
        Self {
            size,
            channels,
            mass: vec![0.0; size * size * channels],
            obstacles: vec![false; size * size],
        }
    }

    pub fn from_parts(
        size: usize,
        channels: usize,
        mass: Vec<f64>,
        obstacles: Vec<bool>,
    ) -> Result<Self> {
        if mass.len() != size * size * channels || obstacles.len() != size * size {
            return Err(Error::invalid("grid buffers do not match the declared shape"));
        }
        if mass.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::invalid("densities must be finite and non-negative"));
        }
        let state = Self { size, channels, mass, obstacles };
        if !state.walls_are_empty() {
            return Err(Error::invalid("obstacle cells must hold zero matter"));
        }
        Ok(state)
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.size * self.size
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.size + x
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_mut(&mut self) -> &mut [f64] {
        &mut self.mass
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n2 = self.cells();
        &self.mass[c * n2..(c + 1) * n2]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n2 = self.cells();
        &mut self.mass[c * n2..(c + 1) * n2]
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.mass[c * self.cells() + self.index(x, y)]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        let i = c * self.cells() + self.index(x, y);
        self.mass[i] = value;
    }

    pub fn obstacles(&self) -> &[bool] {
        &self.obstacles
    }

    pub fn is_wall(&self, cell: usize) -> bool {
        self.obstacles[cell]
    }

    pub fn has_walls(&self) -> bool {
        self.obstacles.iter().any(|&w| w)
    }

    /// Installs a wall mask, clearing any matter underneath it.
    pub fn set_obstacles(&mut self, obstacles: Vec<bool>) -> Result<()> {
        if obstacles.len() != self.cells() {
            return Err(Error::invalid("obstacle mask does not match the grid"));
        }
        self.obstacles = obstacles;
        let n2 = self.cells();
        for c in 0..self.channels {
            for cell in 0..n2 {
                if self.obstacles[cell] {
                    self.mass[c * n2 + cell] = 0.0;
                }
            }
        }
        Ok(())
    }

    /// Per-cell sum over channels.
    pub fn channel_sum(&self) -> Vec<f64> {
        let n2 = self.cells();
        let mut out = self.channel(0).to_vec();
        for c in 1..self.channels {
            for (o, m) in out.iter_mut().zip(&self.mass[c * n2..(c + 1) * n2]) {
                *o += m;
            }
        }
        out
    }

    pub fn channel_mass(&self, c: usize) -> f64 {
        compensated_sum(self.channel(c).iter().copied())
    }

    pub fn channel_masses(&self) -> Vec<f64> {
        (0..self.channels).map(|c| self.channel_mass(c)).collect()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.mass.iter().copied())
    }

    pub fn is_finite(&self) -> bool {
        self.mass.iter().all(|m| m.is_finite())
    }

    pub fn walls_are_empty(&self) -> bool {
        let n2 = self.cells();
        (0..self.channels).all(|c| {
            self.obstacles
                .iter()
                .enumerate()
                .all(|(cell, &wall)| !wall || self.mass[c * n2 + cell] == 0.0)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walls_clear_matter() {
        let mut s = GridState::empty(8, 2);
        s.mass_mut().iter_mut().for_each(|m| *m = 1.0);
        let mut walls = vec![false; 64];
        walls[9] = true;
        s.set_obstacles(walls).unwrap();
        assert_eq!(s.get(1, 1, 0), 0.0);
        assert_eq!(s.get(1, 1, 1), 0.0);
        assert_eq!(s.total_mass(), 126.0);
        assert!(s.walls_are_empty());
    }

    #[test]
    fn rejects_negative_or_walled_matter() {
        let mut mass = vec![0.0; 64];
        mass[3] = -1.0;
        assert!(GridState::from_parts(8, 1, mass, vec![false; 64]).is_err());
        let mut mass = vec![0.0; 64];
        mass[3] = 1.0;
        let mut walls = vec![false; 64];
        walls[3] = true;
        assert!(GridState::from_parts(8, 1, mass, walls).is_err());
    }
}
