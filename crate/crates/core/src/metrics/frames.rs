//! Rendering states to 8-bit RGB frames.
//!
//! Hue encodes the genome of a cell, brightness encodes its channel-summed
//! mass (`1 - exp(-2·m)`), walls are drawn mid-gray. The mapping is fixed so
//! compression sizes are comparable across runs.

use crate::engine::GridState;
use crate::genome::ParameterMap;

use super::census::MASS_EPSILON;

const WALL_GRAY: u8 = 96;
const SATURATION: f64 = 0.85;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    /// Packed RGB, row-major.
    pub rgb: Vec<u8>,
}

impl Frame {
    pub fn solid(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self { width, height, rgb: rgb.repeat(width * height) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrameSequence {
    /// Steps between consecutive frames.
    pub stride: u64,
    pub frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(stride: u64) -> Self {
        Self { stride, frames: Vec::new() }
    }

    /// Appends a frame; all frames must share one size.
    pub fn push(&mut self, frame: Frame) {
        if let Some(first) = self.frames.first() {
            assert_eq!(
                (first.width, first.height),
                (frame.width, frame.height),
                "frame dimensions must not change within a sequence"
            );
        }
        self.frames.push(frame);
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dimensions(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|f| (f.width, f.height))
    }
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let h6 = (h.fract() * 6.0).min(5.999_999);
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match sector as u8 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    let to8 = |c: f64| (c * 255.0).round().clamp(0.0, 255.0) as u8;
    [to8(r), to8(g), to8(b)]
}

pub fn render_frame(state: &GridState, params: &ParameterMap) -> Frame {
    let n = state.size();
    let totals = state.channel_sum();
    let mut rgb = Vec::with_capacity(n * n * 3);
    let mut last: Option<(usize, f64)> = None;
    for (cell, &m) in totals.iter().enumerate() {
        if state.is_wall(cell) {
            rgb.extend_from_slice(&[WALL_GRAY; 3]);
            continue;
        }
        if m <= MASS_EPSILON {
            rgb.extend_from_slice(&[0, 0, 0]);
            continue;
        }
        let hue = match last {
            Some((prev, hue))
                if params.weights_at(prev) == params.weights_at(cell)
                    && params.mixing_at(prev) == params.mixing_at(cell) =>
            {
                hue
            }
            _ => params.genome_at(cell).hue(),
        };
        last = Some((cell, hue));
        let value = 1.0 - (-2.0 * m).exp();
        rgb.extend_from_slice(&hsv_to_rgb(hue, SATURATION, value));
    }
    Frame { width: n, height: n, rgb }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cells_are_black_and_walls_gray() {
        let mut state = GridState::empty(8, 1);
        let mut walls = vec![false; 64];
        walls[5] = true;
        state.set_obstacles(walls).unwrap();
        state.set(3, 3, 0, 1.0);
        let params = ParameterMap::uniform(64, &[0.5], &[0.5]).unwrap();
        let frame = render_frame(&state, &params);
        assert_eq!(frame.rgb.len(), 64 * 3);
        assert_eq!(&frame.rgb[0..3], &[0, 0, 0]);
        assert_eq!(&frame.rgb[15..18], &[WALL_GRAY; 3]);
        let lit = &frame.rgb[(3 * 8 + 3) * 3..(3 * 8 + 3) * 3 + 3];
        assert!(lit.iter().any(|&c| c > 100));
    }

    #[test]
    fn distinct_genomes_get_distinct_colors() {
        let mut state = GridState::empty(8, 1);
        state.set(1, 1, 0, 3.0);
        state.set(5, 5, 0, 3.0);
        let mut params = ParameterMap::uniform(64, &[0.5], &[0.5]).unwrap();
        params.weights_at_mut(5 * 8 + 5)[0] = -0.25;
        let frame = render_frame(&state, &params);
        let px = |x: usize, y: usize| frame.rgb[(y * 8 + x) * 3..(y * 8 + x) * 3 + 3].to_vec();
        assert_ne!(px(1, 1), px(5, 5));
    }

    #[test]
    fn hsv_primaries() {
        assert_eq!(hsv_to_rgb(0.0, 1.0, 1.0), [255, 0, 0]);
        assert_eq!(hsv_to_rgb(1.0 / 3.0, 1.0, 1.0), [0, 255, 0]);
        assert_eq!(hsv_to_rgb(2.0 / 3.0, 1.0, 1.0), [0, 0, 255]);
        assert_eq!(hsv_to_rgb(0.3, 0.0, 0.0), [0, 0, 0]);
    }
}
