//! Reintegration transport.
//!
//! Each source cell's matter is treated as a unit square displaced by
//! `F·dt` and split over the (at most four) cells it overlaps, in proportion
//! to overlap area. Displacements are at most one cell, so every destination
//! only receives from its 3×3 neighborhood; the transport is evaluated as a
//! gather over that neighborhood so each destination is independent.
//! A share that would land on a wall stays in its source cell.

use super::config::SimConfig;
use super::flow::FlowField;
use super::state::GridState;

/// Neighbor offsets `(dx, dy)` in slot order.
pub const OFFSETS: [(isize, isize); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (0, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Slot of the destination cell itself.
pub const SELF_SLOT: usize = 4;

/// `I(src, dest)` per channel: the fraction of the source's matter that
/// arrives at the destination. Stored per destination, one slot per
/// neighbor in [`OFFSETS`] order (the source is `dest + offset`).
#[derive(Clone, Debug, PartialEq)]
pub struct TransferWeights {
    size: usize,
    channels: usize,
    slots: Vec<[f64; 9]>,
}

impl TransferWeights {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn slots(&self, c: usize, dest: usize) -> &[f64; 9] {
        &self.slots[c * self.size * self.size + dest]
    }

    /// Source cell feeding `dest` through `slot`.
    #[inline]
    pub fn source(&self, dest: usize, slot: usize) -> usize {
        neighbor(self.size, dest, OFFSETS[slot])
    }

    /// `I(src, dest)` for channel `c`, zero when the cells are not neighbors.
    pub fn weight(&self, c: usize, src: usize, dest: usize) -> f64 {
        (0..9)
            .find(|&k| self.source(dest, k) == src)
            .map(|k| self.slots(c, dest)[k])
            .unwrap_or(0.0)
    }
}

#[inline]
pub fn neighbor(n: usize, cell: usize, (dx, dy): (isize, isize)) -> usize {
    let x = (cell % n) as isize + dx;
    let y = (cell / n) as isize + dy;
    let n_i = n as isize;
    (y.rem_euclid(n_i) as usize) * n + x.rem_euclid(n_i) as usize
}

/// Where one source's unit square lands, as per-axis overlap fractions for
/// relative offsets -1, 0 and +1.
#[derive(Clone, Copy, Default)]
struct Landing {
    wx: [f64; 3],
    wy: [f64; 3],
}

impl Landing {
    fn new(dx: f64, dy: f64) -> Self {
        Landing { wx: axis_weights(dx), wy: axis_weights(dy) }
    }

    /// Fraction delivered to the cell at relative offset `(rx, ry)` from the source.
    #[inline]
    fn share(&self, rx: isize, ry: isize) -> f64 {
        self.wx[(rx + 1) as usize] * self.wy[(ry + 1) as usize]
    }
}

#[inline]
fn axis_weights(d: f64) -> [f64; 3] {
    // the clamp only guards against rounding just past one cell
    let d = d.clamp(-1.0, 1.0);
    let base = d.floor();
    let frac = d - base;
    let mut w = [0.0; 3];
    let b = base as isize + 1;
    w[b as usize] = 1.0 - frac;
    if frac > 0.0 {
        w[b as usize + 1] = frac;
    }
    w
}

/// Moves every channel by its own flow. Returns the new state and the
/// transfer proportions used by parameter mixing.
pub fn advect(state: &GridState, flow: &FlowField, cfg: &SimConfig) -> (GridState, TransferWeights) {
    let n = state.size();
    let n2 = n * n;
    let channels = state.channels();
    let obstacles = state.obstacles();
    let walls = state.has_walls();

    let mut next = state.clone();
    let mut slots = vec![[0.0f64; 9]; n2 * channels];
    let mut landings = vec![Landing::default(); n2];
    let mut wall_loss = vec![0.0f64; n2];
    let wrap = |v: usize, d: isize| (v as isize + d).rem_euclid(n as isize) as usize;

    for c in 0..channels {
        for (cell, landing) in landings.iter_mut().enumerate() {
            let (vx, vy) = flow.at(c, cell);
            *landing = Landing::new(vx * cfg.dt, vy * cfg.dt);
        }
        if walls {
            for (cell, loss) in wall_loss.iter_mut().enumerate() {
                *loss = 0.0;
                if obstacles[cell] {
                    continue;
                }
                let l = &landings[cell];
                let (x, y) = (cell % n, cell / n);
                for ry in -1..=1isize {
                    let wy = l.wy[(ry + 1) as usize];
                    if wy == 0.0 {
                        continue;
                    }
                    let row = wrap(y, ry) * n;
                    for rx in -1..=1isize {
                        let wx = l.wx[(rx + 1) as usize];
                        if wx != 0.0 && obstacles[row + wrap(x, rx)] {
                            *loss += wx * wy;
                        }
                    }
                }
            }
        }

        let mass = state.channel(c);
        let out = next.channel_mut(c);
        let channel_slots = &mut slots[c * n2..(c + 1) * n2];
        for y in 0..n {
            let rows = [wrap(y, -1) * n, y * n, wrap(y, 1) * n];
            for x in 0..n {
                let cols = [wrap(x, -1), x, wrap(x, 1)];
                let dest = y * n + x;
                let weights = &mut channel_slots[dest];
                if walls && obstacles[dest] {
                    out[dest] = 0.0;
                    continue;
                }
                let mut acc = 0.0;
                for (k, &(ox, oy)) in OFFSETS.iter().enumerate() {
                    let src = rows[(oy + 1) as usize] + cols[(ox + 1) as usize];
                    // dest sits at offset (-ox, -oy) relative to src
                    let mut w = landings[src].share(-ox, -oy);
                    if k == SELF_SLOT && walls {
                        w += wall_loss[dest];
                    }
                    weights[k] = w;
                    acc += w * mass[src];
                }
                out[dest] = acc;
            }
        }
    }
    (next, TransferWeights { size: n, channels, slots })
}
