//! Flow field: attraction up the affinity gradient blended with
//! density-triggered diffusion.

use super::affinity::AffinityMap;
use super::config::SimConfig;
use super::state::GridState;

/// Per-cell, per-channel velocity in cells per unit time.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    size: usize,
    channels: usize,
    fx: Vec<f64>,
    fy: Vec<f64>,
}

impl FlowField {
    pub fn zero(size: usize, channels: usize) -> Self {
        let len = size * size * channels;
        Self { size, channels, fx: vec![0.0; len], fy: vec![0.0; len] }
    }

    pub fn uniform(size: usize, channels: usize, vx: f64, vy: f64) -> Self {
        let len = size * size * channels;
        Self { size, channels, fx: vec![vx; len], fy: vec![vy; len] }
    }

    pub fn from_parts(size: usize, channels: usize, fx: Vec<f64>, fy: Vec<f64>) -> Self {
        assert_eq!(fx.len(), size * size * channels);
        assert_eq!(fy.len(), size * size * channels);
        Self { size, channels, fx, fy }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn at(&self, c: usize, cell: usize) -> (f64, f64) {
        let i = c * self.size * self.size + cell;
        (self.fx[i], self.fy[i])
    }

    pub fn fx(&self) -> &[f64] {
        &self.fx
    }

    pub fn fy(&self) -> &[f64] {
        &self.fy
    }
}

/// Gradient by central differences on the torus.
///
/// Next to a wall the wall takes the cell's own value, which turns the
/// stencil into a one-sided difference toward the open neighbor. Wall cells
/// themselves get a zero gradient.
pub fn gradient(field: &[f64], size: usize, obstacles: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let n = size;
    let mut gx = vec![0.0; n * n];
    let mut gy = vec![0.0; n * n];
    let walls = obstacles.iter().any(|&w| w);
    for y in 0..n {
        let up = if y == 0 { n - 1 } else { y - 1 };
        let down = if y + 1 == n { 0 } else { y + 1 };
        for x in 0..n {
            let c = y * n + x;
            let left = y * n + if x == 0 { n - 1 } else { x - 1 };
            let right = y * n + if x + 1 == n { 0 } else { x + 1 };
            let top = up * n + x;
            let bottom = down * n + x;
            if !walls {
                gx[c] = 0.5 * (field[right] - field[left]);
                gy[c] = 0.5 * (field[bottom] - field[top]);
                continue;
            }
            if obstacles[c] {
                continue;
            }
            gx[c] = one_sided(field, c, left, right, obstacles);
            gy[c] = one_sided(field, c, top, bottom, obstacles);
        }
    }
    (gx, gy)
}

#[inline]
fn one_sided(field: &[f64], c: usize, lo: usize, hi: usize, walls: &[bool]) -> f64 {
    match (walls[lo], walls[hi]) {
        (false, false) => 0.5 * (field[hi] - field[lo]),
        (true, false) => field[hi] - field[c],
        (false, true) => field[c] - field[lo],
        (true, true) => 0.0,
    }
}

/// Crowding weight `α = clamp((A_Σ / θ_A)^n, 0, 1)`.
#[inline]
pub fn crowding(total: f64, theta_a: f64, exponent: f64) -> f64 {
    let ratio = total / theta_a;
    if ratio >= 1.0 {
        return 1.0;
    }
    if exponent == exponent.trunc() && exponent <= 16.0 {
        ratio.powi(exponent as i32).clamp(0.0, 1.0)
    } else {
        ratio.powf(exponent).clamp(0.0, 1.0)
    }
}

/// `F_i = (1 - α)·∇U_i - α·∇A_Σ`, then wall-normal zeroing and the
/// displacement clamp `|F·dt| <= max_displacement`.
pub fn compute_flow(affinity: &AffinityMap, state: &GridState, cfg: &SimConfig) -> FlowField {
    let n = state.size();
    let n2 = n * n;
    let channels = state.channels();
    let obstacles = state.obstacles();
    let walls = state.has_walls();
    let total = state.channel_sum();
    let (sx, sy) = gradient(&total, n, obstacles);
    let alpha: Vec<f64> = total
        .iter()
        .map(|&t| crowding(t, cfg.theta_a, cfg.alpha_n))
        .collect();
    let max_speed = cfg.max_displacement / cfg.dt;

    let mut fx = vec![0.0; n2 * channels];
    let mut fy = vec![0.0; n2 * channels];
    for c in 0..channels {
        let (ux, uy) = gradient(affinity.channel(c), n, obstacles);
        let out_x = &mut fx[c * n2..(c + 1) * n2];
        let out_y = &mut fy[c * n2..(c + 1) * n2];
        for cell in 0..n2 {
            let a = alpha[cell];
            let mut vx = (1.0 - a) * ux[cell] - a * sx[cell];
            let mut vy = (1.0 - a) * uy[cell] - a * sy[cell];
            if walls {
                if obstacles[cell] {
                    continue;
                }
                let (x, y) = (cell % n, cell / n);
                let right = y * n + (x + 1) % n;
                let left = y * n + (x + n - 1) % n;
                let down = ((y + 1) % n) * n + x;
                let up = ((y + n - 1) % n) * n + x;
                if (vx > 0.0 && obstacles[right]) || (vx < 0.0 && obstacles[left]) {
                    vx = 0.0;
                }
                if (vy > 0.0 && obstacles[down]) || (vy < 0.0 && obstacles[up]) {
                    vy = 0.0;
                }
            }
            let speed2 = vx * vx + vy * vy;
            if speed2 > max_speed * max_speed {
                let s = max_speed / speed2.sqrt();
                vx *= s;
                vy *= s;
            }
            out_x[cell] = vx;
            out_y[cell] = vy;
        }
    }
    FlowField { size: n, channels, fx, fy }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SimConfig {
        SimConfig { grid_size: 16, ..Default::default() }
    }

    #[test]
    fn constant_fields_have_no_flow() {
        let mut state = GridState::empty(16, 1);
        state.mass_mut().iter_mut().for_each(|m| *m = 0.7);
        let u = AffinityMap::from_parts(16, 1, vec![0.3; 256]).unwrap();
        let f = compute_flow(&u, &state, &cfg());
        assert!(f.fx().iter().chain(f.fy()).all(|&v| v == 0.0));
    }

    #[test]
    fn central_difference_on_linear_ramp() {
        let n = 16;
        let field: Vec<f64> = (0..n * n).map(|i| (i % n) as f64 * 0.1).collect();
        let (gx, gy) = gradient(&field, n, &vec![false; n * n]);
        // Interior cells see the exact slope, the wrap seam does not.
        assert!((gx[5 * n + 7] - 0.1).abs() < 1e-15);
        assert!(gy.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn walls_get_one_sided_differences() {
        let n = 8;
        let field: Vec<f64> = (0..n * n).map(|i| ((i % n) * (i % n)) as f64).collect();
        let mut walls = vec![false; n * n];
        walls[3 * n + 4] = true;
        let (gx, _) = gradient(&field, n, &walls);
        // cell (3,3): right neighbor is a wall, use f(3) - f(2)
        assert_eq!(gx[3 * n + 3], 9.0 - 4.0);
        // cell (5,3): left neighbor is a wall, use f(6) - f(5)
        assert_eq!(gx[3 * n + 5], 36.0 - 25.0);
        assert_eq!(gx[3 * n + 4], 0.0);
    }

    #[test]
    fn flow_into_walls_is_zeroed() {
        let n = 8;
        let mut state = GridState::empty(n, 1);
        let mut walls = vec![false; n * n];
        walls[2 * n + 5] = true;
        state.set_obstacles(walls).unwrap();
        let values: Vec<f64> = (0..n * n).map(|i| (i % n) as f64 * 0.1).collect();
        let u = AffinityMap::from_parts(n, 1, values).unwrap();
        let f = compute_flow(&u, &state, &SimConfig { grid_size: n, ..Default::default() });
        assert_eq!(f.at(0, 2 * n + 4).0, 0.0);
        assert!(f.at(0, 3 * n + 4).0 > 0.0);
    }

    #[test]
    fn displacement_is_clamped() {
        let n = 16;
        let state = GridState::empty(n, 1);
        let values: Vec<f64> = (0..n * n).map(|i| (i % n) as f64 * 100.0).collect();
        let u = AffinityMap::from_parts(n, 1, values).unwrap();
        let c = cfg();
        let f = compute_flow(&u, &state, &c);
        for (vx, vy) in f.fx().iter().zip(f.fy()) {
            assert!(vx.hypot(*vy) * c.dt <= c.max_displacement + 1e-12);
        }
    }
}
