use serde::{Deserialize, Serialize};

use crate::explorer::SystemParams;

/// Which branch of the exploration loop produced a discovery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Parameters sampled uniformly during the bootstrap phase.
    Bootstrap,
    /// Parameters sampled uniformly by the random-search baseline.
    Random,
    /// Mutation of the discovery nearest to a sampled goal.
    Goal,
    /// Mutation of a discovery picked by a person.
    Human,
}

/// Paths of stored run artifacts, relative to the archive directory.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Artifacts {
    pub snapshot: Option<String>,
    pub video: Option<String>,
    pub census: Option<String>,
}

/// One explored system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discovery {
    pub id: u64,
    pub parent: Option<u64>,
    pub branch: Branch,
    /// Seed of the simulation.
    pub seed: u64,
    pub theta: SystemParams,
    /// Multiplier applied to the mutation scales when deriving `theta`.
    pub mutation_multiplier: f64,
    /// Goal the iteration aimed for, if any.
    pub target: Option<Vec<f64>>,
    /// Reached goal; absent exactly when the run failed.
    pub goal: Option<Vec<f64>>,
    pub failure: Option<String>,
    /// Number of discoveries the iteration could see when it was dispatched.
    pub dispatch_archive_size: u64,
    pub steps_run: u64,
    #[serde(default)]
    pub artifacts: Artifacts,
}

impl Discovery {
    pub fn succeeded(&self) -> bool {
        self.goal.is_some()
    }
}
