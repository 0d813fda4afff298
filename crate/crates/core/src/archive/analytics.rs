//! Exploration analytics over goal sets: average pairwise distance, bin
//! coverage and their evolution over the discovery sequence.
//!
//! All measures work in min-max normalized goal space. When archives are
//! compared they must share one [`Normalizer`] built over their union.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 5;

/// Per-dimension affine map onto `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Normalizer {
    /// Bounds over every goal of every given set.
    pub fn union(sets: &[&[Vec<f64>]]) -> Result<Self> {
        let dims = sets
            .iter()
            .flat_map(|s| s.iter())
            .map(|g| g.len())
            .next()
            .ok_or_else(|| Error::invalid("cannot normalize an empty goal set"))?;
        let mut lo = vec![f64::INFINITY; dims];
        let mut hi = vec![f64::NEG_INFINITY; dims];
        for g in sets.iter().flat_map(|s| s.iter()) {
            if g.len() != dims {
                return Err(Error::invalid("goal sets of different dimension cannot be compared"));
            }
            for i in 0..dims {
                lo[i] = lo[i].min(g[i]);
                hi[i] = hi[i].max(g[i]);
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn of(goals: &[Vec<f64>]) -> Result<Self> {
        Self::union(&[goals])
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    /// Degenerate dimensions map to 0.
    pub fn apply(&self, goal: &[f64]) -> Vec<f64> {
        goal.iter()
            .enumerate()
            .map(|(i, &v)| {
                let w = self.hi[i] - self.lo[i];
                if w > 0.0 {
                    (v - self.lo[i]) / w
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn apply_all(&self, goals: &[Vec<f64>]) -> Vec<Vec<f64>> {
        goals.iter().map(|g| self.apply(g)).collect()
    }
}

/// Mean Euclidean distance over all unordered pairs of (already
/// normalized) points.
pub fn avg_pairwise_distance(points: &[Vec<f64>]) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("average pairwise distance needs at least two points"));
    }
    // plain left-to-right sums keep the result reproducible by a naive loop
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let mut d2 = 0.0;
            for (a, b) in points[i].iter().zip(&points[j]) {
                d2 += (a - b) * (a - b);
            }
            total += d2.sqrt();
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Bin index of a normalized coordinate; the upper edge belongs to the last bin.
#[inline]
pub fn bin_of(v: f64, bins: usize) -> usize {
    if v <= 0.0 {
        0
    } else {
        ((v * bins as f64).floor() as usize).min(bins - 1)
    }
}

/// Number of distinct occupied cells after splitting every normalized
/// dimension into `bins` equal bins.
pub fn bin_coverage(points: &[Vec<f64>], bins: usize) -> usize {
    let cells: HashSet<Vec<usize>> = points
        .iter()
        .map(|p| p.iter().map(|&v| bin_of(v, bins)).collect())
        .collect();
    cells.len()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    /// Number of successful discoveries in the prefix.
    pub discoveries: usize,
    pub coverage: usize,
    /// Absent for prefixes with fewer than two points.
    pub avg_pairwise_distance: Option<f64>,
}

/// Coverage and spread of growing prefixes, every `stride` points and at
/// the full length. With a fixed normalizer the coverage never decreases.
pub fn coverage_over_time(points: &[Vec<f64>], bins: usize, stride: usize) -> Vec<CoveragePoint> {
    let stride = stride.max(1);
    let mut out = Vec::new();
    let mut cells: HashSet<Vec<usize>> = HashSet::new();
    for (i, p) in points.iter().enumerate() {
        cells.insert(p.iter().map(|&v| bin_of(v, bins)).collect());
        let len = i + 1;
        if len % stride == 0 || len == points.len() {
            out.push(CoveragePoint {
                discoveries: len,
                coverage: cells.len(),
                avg_pairwise_distance: avg_pairwise_distance(&points[..len]).ok(),
            });
        }
    }
    out
}

/// Area of the convex hull of 2-D points (monotone chain). Fewer than three
/// non-collinear points enclose no area.
pub fn convex_hull_area(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let mut twice = 0.0;
    for i in 0..hull.len() {
        let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
        twice += a.0 * b.1 - b.0 * a.1;
    }
    (twice / 2.0).abs()
}
