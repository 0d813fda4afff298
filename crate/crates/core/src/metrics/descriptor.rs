//! Goal-space descriptors of finished runs.

use serde::{Deserialize, Serialize};

use super::census::evolutionary_activity;
use super::compression::{compression_complexity, EncoderConfig};
use super::spatial::{center_of_mass, entropy_levels, multiscale_entropy};
use crate::error::{Error, Result};
use crate::run::RunRecord;

/// Which goal space a campaign explores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Evolutionary activity, compressed size and five entropy levels.
    Ecosystem,
    /// Final center of mass.
    Movement,
}

impl ExperimentKind {
    pub fn dims(&self) -> usize {
        match self {
            ExperimentKind::Ecosystem => 7,
            ExperimentKind::Movement => 2,
        }
    }

    /// Dimension names for a grid of the given size. Entropy dimensions are
    /// labelled with their binning level.
    pub fn goal_names(&self, grid_size: usize) -> Vec<String> {
        match self {
            ExperimentKind::Ecosystem => {
                let mut names = vec!["EA".to_string(), "compression_bytes".to_string()];
                names.extend(entropy_levels(grid_size).iter().map(|l| format!("H{l}")));
                names
            }
            ExperimentKind::Movement => vec!["com_x".into(), "com_y".into()],
        }
    }

    /// Smallest grid on which every goal dimension is defined.
    pub fn min_grid_size(&self) -> usize {
        match self {
            ExperimentKind::Ecosystem => 64,
            ExperimentKind::Movement => 8,
        }
    }
}

/// A point in goal space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub kind: ExperimentKind,
    pub values: Vec<f64>,
}

/// Assembles the goal vector of a run. Divergent runs have no descriptor.
pub fn descriptor(run: &RunRecord, kind: ExperimentKind, encoder: &EncoderConfig) -> Result<Option<MetricVector>> {
    if run.diverged() {
        return Ok(None);
    }
    let bytes = match kind {
        ExperimentKind::Ecosystem => Some(compression_complexity(&run.frames, encoder)?),
        ExperimentKind::Movement => None,
    };
    descriptor_from_parts(run, kind, bytes)
}

/// Like [`descriptor`], with the compressed size of the frame sequence
/// already known. Ecosystem descriptors require it.
pub fn descriptor_from_parts(run: &RunRecord, kind: ExperimentKind, compressed_bytes: Option<u64>) -> Result<Option<MetricVector>> {
    if run.diverged() {
        return Ok(None);
    }
    let n = run.final_state.size();
    if n < kind.min_grid_size() {
        return Err(Error::config(format!(
            "{kind:?} descriptors need a grid of at least {}",
            kind.min_grid_size()
        )));
    }
    let values = match kind {
        ExperimentKind::Ecosystem => {
            let bytes = compressed_bytes
                .ok_or_else(|| Error::invalid("ecosystem descriptors need the compressed frame size"))?;
            let ea = if run.census.len() >= 2 { evolutionary_activity(&run.census)? } else { 0.0 };
            let mut v = vec![ea, bytes as f64];
            for level in entropy_levels(n) {
                v.push(multiscale_entropy(&run.final_state, level)?);
            }
            v
        }
        ExperimentKind::Movement => {
            let (x, y) = center_of_mass(&run.final_state)?;
            vec![x, y]
        }
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    Ok(Some(MetricVector { kind, values }))
}
