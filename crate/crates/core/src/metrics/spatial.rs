//! Multi-scale entropy and center of mass of the matter distribution.

use crate::engine::GridState;
use crate::error::{Error, Result};
use crate::sum::KahanSum;

/// Entropy of the channel-summed mass after block-summing into
/// `2^level × 2^level` bins, normalized by `ln(4^level)` into [0, 1].
/// An empty world has entropy 0.
pub fn multiscale_entropy(state: &GridState, level: u32) -> Result<f64> {
    let n = state.size();
    let bins = 1usize
        .checked_shl(level)
        .filter(|&b| b >= 2 && b <= n)
        .ok_or_else(|| Error::invalid(format!("entropy level {level} unsupported on a {n}-cell grid")))?;
    let totals = state.channel_sum();
    let mut binned = vec![0.0; bins * bins];
    for y in 0..n {
        let by = y * bins / n;
        for x in 0..n {
            binned[by * bins + x * bins / n] += totals[y * n + x];
        }
    }
    let mut total = KahanSum::new();
    total.extend(binned.iter().copied());
    let total = total.value();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let mut h = KahanSum::new();
    for &m in &binned {
        if m > 0.0 {
            let p = m / total;
            h.add(-p * p.ln());
        }
    }
    let normalized = h.value() / (level as f64 * 4f64.ln());
    Ok(normalized.clamp(0.0, 1.0))
}

/// The five finest levels below full resolution: `log2(n) - 5 ..= log2(n) - 1`,
/// i.e. 3..=7 on a 256 grid and 1..=5 on a 64 grid.
pub fn entropy_levels(grid_size: usize) -> Vec<u32> {
    let top = (usize::BITS - 1 - grid_size.leading_zeros()).saturating_sub(1);
    let low = top.saturating_sub(4).max(1);
    (low..=top).collect()
}

/// Mass-weighted mean `(x, y)` cell coordinate, without toroidal wrap.
pub fn center_of_mass(state: &GridState) -> Result<(f64, f64)> {
    let n = state.size();
    let totals = state.channel_sum();
    let (mut m, mut mx, mut my) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
    for (cell, &v) in totals.iter().enumerate() {
        if v > 0.0 {
            m.add(v);
            mx.add(v * (cell % n) as f64);
            my.add(v * (cell / n) as f64);
        }
    }
    let m = m.value();
    if m <= 0.0 {
        return Err(Error::invalid("center of mass of an empty world"));
    }
    Ok((mx.value() / m, my.value() / m))
}
