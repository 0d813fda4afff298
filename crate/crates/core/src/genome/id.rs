use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const QUANTUM: f64 = 1e6;

/// Identity of a parameter vector, quantized to 1e-6.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GenomeId(pub u64);

impl GenomeId {
    /// Digest of a cell's `(h, q)` pair. Entries must be finite.
    pub fn of(weights: &[f64], mixing: &[f64]) -> Self {
        let mut hasher = Sha256::new();
        hasher.update((weights.len() as u64).to_le_bytes());
        for v in weights.iter().chain(mixing) {
            hasher.update(quantize(*v).to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        GenomeId(u64::from_le_bytes(head))
    }

    /// Hue in [0, 1) used when rendering.
    pub fn hue(&self) -> f64 {
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

impl fmt::Display for GenomeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

fn quantize(v: f64) -> i64 {
    let q = (v * QUANTUM).round();
    // -0.0 and 0.0 must agree.
    if q == 0.0 {
        0
    } else {
        q as i64
    }
}

/// Identity of a flat parameter vector.
pub fn genome_id(params: &[f64]) -> Result<GenomeId> {
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("genome vector contains non-finite entries"));
    }
    Ok(GenomeId::of(params, &[]))
}
