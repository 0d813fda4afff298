//! Wall presets and initial matter layouts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::GridState;
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObstaclePreset {
    #[default]
    None,
    /// 4×4 rooms joined by doorways, closed along row 0 and column 0 so the
    /// torus seam acts as an outer wall.
    CornerMaze,
}

impl ObstaclePreset {
    pub fn mask(&self, n: usize) -> Vec<bool> {
        match self {
            ObstaclePreset::None => vec![false; n * n],
            ObstaclePreset::CornerMaze => corner_maze(n),
        }
    }
}

fn corner_maze(n: usize) -> Vec<bool> {
    let room = (n / 4).max(4);
    let door = (room / 4).max(2);
    let door_lo = room / 2 - door / 2;
    let door_hi = door_lo + door;
    let in_door = |t: usize| {
        let r = t % room;
        (door_lo..door_hi).contains(&r)
    };
    let mut mask = vec![false; n * n];
    for y in 0..n {
        for x in 0..n {
            let outer = x == 0 || y == 0;
            let vertical = x % room == 0 && !in_door(y);
            let horizontal = y % room == 0 && !in_door(x);
            mask[y * n + x] = outer || vertical || horizontal;
        }
    }
    mask
}

/// Initial matter placement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitLayout {
    Empty,
    /// Uniform noise in `[0, 2·density]` over a square patch. The patch center
    /// and side are fractions of the grid size.
    Noise {
        center_x: f64,
        center_y: f64,
        extent: f64,
        density: f64,
    },
    /// Several noise discs at random positions.
    Blobs {
        count: usize,
        /// Disc radius as a fraction of the grid size.
        radius: f64,
        density: f64,
    },
}

impl Default for InitLayout {
    fn default() -> Self {
        InitLayout::Noise { center_x: 0.5, center_y: 0.5, extent: 0.5, density: 0.5 }
    }
}

const INIT_STREAM: u64 = 0x696e_6974;

impl InitLayout {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitLayout::Empty => true,
            InitLayout::Noise { center_x, center_y, extent, density } => {
                (0.0..=1.0).contains(&center_x)
                    && (0.0..=1.0).contains(&center_y)
                    && extent > 0.0
                    && extent <= 1.0
                    && density >= 0.0
                    && density.is_finite()
            }
            InitLayout::Blobs { radius, density, .. } => {
                radius > 0.0 && radius <= 0.5 && density >= 0.0 && density.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid initial layout {self:?}")))
        }
    }

    /// Fills every channel of `state` (walls stay empty).
    pub fn apply(&self, state: &mut GridState, seed: u64) {
        let n = state.size();
        let mut rng = stream(&[seed, INIT_STREAM]);
        match *self {
            InitLayout::Empty => {}
            InitLayout::Noise { center_x, center_y, extent, density } => {
                let side = ((extent * n as f64).round() as usize).clamp(1, n);
                let x0 = (center_x * n as f64 - side as f64 / 2.0).round() as isize;
                let y0 = (center_y * n as f64 - side as f64 / 2.0).round() as isize;
                for c in 0..state.channels() {
                    for dy in 0..side as isize {
                        for dx in 0..side as isize {
                            let x = (x0 + dx).rem_euclid(n as isize) as usize;
                            let y = (y0 + dy).rem_euclid(n as isize) as usize;
                            let v = rng.random::<f64>() * 2.0 * density;
                            state.set(x, y, c, v);
                        }
                    }
                }
            }
            InitLayout::Blobs { count, radius, density } => {
                let r = radius * n as f64;
                let reach = r.ceil() as isize;
                for _ in 0..count {
                    let cx = rng.random_range(0..n) as isize;
                    let cy = rng.random_range(0..n) as isize;
                    for c in 0..state.channels() {
                        for dy in -reach..=reach {
                            for dx in -reach..=reach {
                                if ((dx * dx + dy * dy) as f64) > r * r {
                                    continue;
                                }
                                let x = (cx + dx).rem_euclid(n as isize) as usize;
                                let y = (cy + dy).rem_euclid(n as isize) as usize;
                                let v = rng.random::<f64>() * 2.0 * density;
                                state.set(x, y, c, v);
                            }
                        }
                    }
                }
            }
        }
        let walls = state.obstacles().to_vec();
        let n2 = state.cells();
        for c in 0..state.channels() {
            let channel = state.channel_mut(c);
            for cell in 0..n2 {
                if walls[cell] {
                    channel[cell] = 0.0;
                }
            }
        }
    }
}
