use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::GridState;
use crate::error::{Error, Result};
use crate::genome::{GenomeId, ParameterMap};

/// Cells holding less channel-summed mass than this are ignored by the
/// census, so numerical dust never counts as a population.
pub const MASS_EPSILON: f64 = 1e-6;

/// Mass proportion carried by each genome.
pub type Census = BTreeMap<GenomeId, f64>;

/// Groups matter by genome. Returns an empty census for an empty world.
pub fn population_census(state: &GridState, params: &ParameterMap) -> Census {
    let totals = state.channel_sum();
    let mut census = Census::new();
    let mut counted = 0.0;
    let mut last: Option<(usize, GenomeId)> = None;
    for (cell, &m) in totals.iter().enumerate() {
        if m <= MASS_EPSILON {
            continue;
        }
        // Neighboring cells usually carry bitwise-identical vectors.
        let id = match last {
            Some((prev, id))
                if params.weights_at(prev) == params.weights_at(cell)
                    && params.mixing_at(prev) == params.mixing_at(cell) =>
            {
                id
            }
            _ => params.genome_at(cell),
        };
        last = Some((cell, id));
        *census.entry(id).or_insert(0.0) += m;
        counted += m;
    }
    if counted > 0.0 {
        census.values_mut().for_each(|p| *p /= counted);
    }
    census
}

/// Census snapshots at increasing steps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PopulationSeries {
    pub stride: u64,
    pub steps: Vec<u64>,
    pub samples: Vec<Census>,
}

impl PopulationSeries {
    pub fn new(stride: u64) -> Self {
        Self { stride, ..Default::default() }
    }

    pub fn push(&mut self, step: u64, census: Census) -> Result<()> {
        if self.steps.last().is_some_and(|&s| s >= step) {
            return Err(Error::invalid(format!("census step {step} is not increasing")));
        }
        self.steps.push(step);
        self.samples.push(census);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Tab-separated `step, genome, proportion` rows with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("step\tgenome\tproportion\n");
        for (step, census) in self.steps.iter().zip(&self.samples) {
            for (id, p) in census {
                out.push_str(&format!("{step}\t{id}\t{p}\n"));
            }
        }
        out
    }
}

/// Non-neutral evolutionary activity: the sum over genomes and steps of
/// squared population increases. Decreases contribute nothing; a genome
/// missing from a sample has proportion 0 there.
pub fn evolutionary_activity(series: &PopulationSeries) -> Result<f64> {
    if series.samples.len() < 2 {
        return Err(Error::invalid("evolutionary activity needs at least two samples"));
    }
    for census in &series.samples {
        if census.values().any(|&p| !(0.0..=1.0 + 1e-9).contains(&p)) {
            return Err(Error::invalid("population proportions must lie in [0, 1]"));
        }
    }
    let mut activity = 0.0;
    for pair in series.samples.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        for (id, &p) in cur {
            let before = prev.get(id).copied().unwrap_or(0.0);
            if p > before {
                activity += (p - before) * (p - before);
            }
        }
    }
    Ok(activity)
}
