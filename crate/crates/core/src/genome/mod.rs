//! Localized rule parameters that travel with matter.
//!
//! Every cell carries a kernel-weight vector `h` (used for the affinity map)
//! and a mixing-affinity vector `q` (used only when resolving conflicts
//! between incoming streams). A distinct `(h, q)` pair is a genome.

mod id;
mod mixing;
mod mutation;

pub use id::{genome_id, GenomeId};
pub use mixing::{
    mixing_affinity, mixing_negotiation, mixing_stochastic, negotiation_probabilities,
    resolve_mixing, stochastic_probabilities, Contribution, MixingConfig, MixingRule,
};
pub use mutation::{mutate_map, MutationConfig};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterMap {
    cells: usize,
    dim: usize,
    weights: Vec<f64>,
    mixing: Vec<f64>,
}

impl ParameterMap {
    /// Same `(h, q)` at every cell.
    pub fn uniform(cells: usize, h: &[f64], q: &[f64]) -> Result<Self> {
        if h.len() != q.len() {
            return Err(Error::config(format!(
                "weight and mixing vectors differ in length ({} vs {})",
                h.len(),
                q.len()
            )));
        }
        if h.iter().chain(q).any(|v| !v.is_finite()) {
            return Err(Error::config("parameter vectors must be finite"));
        }
        let dim = h.len();
        let mut weights = Vec::with_capacity(cells * dim);
        let mut mixing = Vec::with_capacity(cells * dim);
        for _ in 0..cells {
            weights.extend_from_slice(h);
            mixing.extend_from_slice(q);
        }
        Ok(Self { cells, dim, weights, mixing })
    }

    pub fn from_parts(cells: usize, dim: usize, weights: Vec<f64>, mixing: Vec<f64>) -> Result<Self> {
        if weights.len() != cells * dim || mixing.len() != cells * dim {
            return Err(Error::invalid("parameter buffers do not match the declared shape"));
        }
        Ok(Self { cells, dim, weights, mixing })
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Length of each per-cell vector, equal to the kernel count.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn weights_at(&self, cell: usize) -> &[f64] {
        &self.weights[cell * self.dim..(cell + 1) * self.dim]
    }

    #[inline]
    pub fn mixing_at(&self, cell: usize) -> &[f64] {
        &self.mixing[cell * self.dim..(cell + 1) * self.dim]
    }

    pub fn weights_at_mut(&mut self, cell: usize) -> &mut [f64] {
        &mut self.weights[cell * self.dim..(cell + 1) * self.dim]
    }

    pub fn mixing_at_mut(&mut self, cell: usize) -> &mut [f64] {
        &mut self.mixing[cell * self.dim..(cell + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mixing(&self) -> &[f64] {
        &self.mixing
    }

    /// Copies cell `src` of `from` into cell `dst` of `self`.
    #[inline]
    pub fn copy_cell(&mut self, dst: usize, from: &ParameterMap, src: usize) {
        let d = self.dim;
        self.weights[dst * d..(dst + 1) * d].copy_from_slice(from.weights_at(src));
        self.mixing[dst * d..(dst + 1) * d].copy_from_slice(from.mixing_at(src));
    }

    /// Genome identity of one cell.
    pub fn genome_at(&self, cell: usize) -> GenomeId {
        GenomeId::of(self.weights_at(cell), self.mixing_at(cell))
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.mixing).all(|v| v.is_finite())
    }
}
