//! Goal-space normalization, goal sampling and nearest-discovery lookup.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running per-dimension bounds of the goals seen so far.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalSpace {
    pub names: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Fraction of the observed range added on each side when sampling.
    pub expansion: f64,
    pub count: usize,
}

impl GoalSpace {
    pub fn new(names: Vec<String>, expansion: f64) -> Self {
        let d = names.len();
        Self { names, min: vec![f64::INFINITY; d], max: vec![f64::NEG_INFINITY; d], expansion, count: 0 }
    }

    pub fn from_goals<'a>(names: Vec<String>, expansion: f64, goals: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut space = Self::new(names, expansion);
        for g in goals {
            space.observe(g);
        }
        space
    }

    pub fn dims(&self) -> usize {
        self.names.len()
    }

    pub fn observe(&mut self, goal: &[f64]) {
        debug_assert_eq!(goal.len(), self.dims());
        for ((lo, hi), &v) in self.min.iter_mut().zip(self.max.iter_mut()).zip(goal) {
            *lo = lo.min(v);
            *hi = hi.max(v);
        }
        self.count += 1;
    }

    /// Width used to normalize dimension `i`; degenerate ranges use 1 so the
    /// map stays invertible.
    fn width(&self, i: usize) -> f64 {
        let w = self.max[i] - self.min[i];
        if w > 0.0 {
            w
        } else {
            1.0
        }
    }

    pub fn normalize(&self, goal: &[f64]) -> Vec<f64> {
        goal.iter().enumerate().map(|(i, &v)| (v - self.min[i]) / self.width(i)).collect()
    }

    pub fn denormalize(&self, point: &[f64]) -> Vec<f64> {
        point.iter().enumerate().map(|(i, &v)| self.min[i] + v * self.width(i)).collect()
    }

    /// A goal drawn uniformly from the observed box, expanded by
    /// `expansion` of its width on every side (in normalized units).
    pub fn sample_goal<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::invalid("cannot sample a goal before any discovery exists"));
        }
        let e = self.expansion;
        let point: Vec<f64> = (0..self.dims())
            .map(|i| {
                if self.max[i] > self.min[i] {
                    rng.random_range(-e..=1.0 + e)
                } else {
                    // a degenerate dimension expands around its single value
                    rng.random_range(-e..=e)
                }
            })
            .collect();
        Ok(self.denormalize(&point))
    }

    /// Index of the goal closest to `target` in normalized space; ties go
    /// to the lowest index.
    pub fn nearest<'a>(&self, target: &[f64], goals: impl IntoIterator<Item = &'a [f64]>) -> Option<usize> {
        let t = self.normalize(target);
        let mut best: Option<(usize, f64)> = None;
        for (i, g) in goals.into_iter().enumerate() {
            let d: f64 = self
                .normalize(g)
                .iter()
                .zip(&t)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }
}
