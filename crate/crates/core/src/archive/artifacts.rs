use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::index::run_dir_name;
use super::record::Artifacts;
use crate::engine::Snapshot;
use crate::error::Result;
use crate::metrics::EncoderConfig;
use crate::run::RunRecord;

pub const SNAPSHOT_FILE: &str = "snapshot.bin";
pub const CENSUS_FILE: &str = "census.tsv";

/// Which run artifacts a campaign keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArtifactPolicy {
    pub snapshot: bool,
    pub video: bool,
    pub census: bool,
}

impl Default for ArtifactPolicy {
    fn default() -> Self {
        Self { snapshot: true, video: true, census: true }
    }
}

impl ArtifactPolicy {
    pub fn none() -> Self {
        Self { snapshot: false, video: false, census: false }
    }
}

/// Writes the selected artifacts of run `id` under `archive_dir` and
/// returns their relative paths. `encoded` is the compressed frame stream.
pub fn write_artifacts(
    archive_dir: &Path,
    id: u64,
    record: &RunRecord,
    encoded: Option<&[u8]>,
    encoder: &EncoderConfig,
    policy: ArtifactPolicy,
) -> Result<Artifacts> {
    let mut out = Artifacts::default();
    if !(policy.snapshot || policy.video || policy.census) {
        return Ok(out);
    }
    let rel = run_dir_name(id);
    let dir = archive_dir.join(&rel);
    fs::create_dir_all(&dir)?;
    if policy.snapshot {
        let snap = Snapshot {
            step: record.steps_run,
            state: record.final_state.clone(),
            params: record.final_params.clone(),
        };
        write_atomic(&dir.join(SNAPSHOT_FILE), &snap.to_bytes())?;
        out.snapshot = Some(format!("{rel}/{SNAPSHOT_FILE}"));
    }
    if policy.video {
        if let Some(bytes) = encoded {
            let name = format!("video.{}", encoder.extension());
            write_atomic(&dir.join(&name), bytes)?;
            out.video = Some(format!("{rel}/{name}"));
        }
    }
    if policy.census {
        write_atomic(&dir.join(CENSUS_FILE), record.census.to_tsv().as_bytes())?;
        out.census = Some(format!("{rel}/{CENSUS_FILE}"));
    }
    Ok(out)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
