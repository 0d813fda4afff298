//! Persistent discovery store and exploration analytics.

pub mod analytics;
mod artifacts;
mod index;
mod record;

pub use analytics::{avg_pairwise_distance, bin_coverage, convex_hull_area, coverage_over_time, CoveragePoint, Normalizer, DEFAULT_BINS};
pub use artifacts::{write_artifacts, ArtifactPolicy};
pub use index::{run_dir_name, ArchiveIndex, ArchiveMeta, FORMAT_VERSION, LEDGER_FILE, META_FILE};
pub use record::{Artifacts, Branch, Discovery};
