//! The on-disk discovery store.
//!
//! An archive directory holds `campaign.json` (written once), `ledger.jsonl`
//! (one JSON discovery per line, append-only, synced after every record) and
//! `runs/<id>/` artifact directories. A torn final line left by a crash is
//! dropped on load.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::record::Discovery;
use crate::error::{Error, Result};
use crate::explorer::{CampaignConfig, GoalSpace};

pub const META_FILE: &str = "campaign.json";
pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const FORMAT_VERSION: u32 = 1;

/// Campaign metadata stored next to the ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub format: u32,
    pub campaign: CampaignConfig,
    pub goal_names: Vec<String>,
    pub encoder_variant: String,
    pub encoder_digest: String,
}

impl ArchiveMeta {
    pub fn for_campaign(campaign: &CampaignConfig) -> Self {
        Self {
            format: FORMAT_VERSION,
            campaign: campaign.clone(),
            goal_names: campaign.experiment.goal_names(campaign.template.sim.grid_size),
            encoder_variant: campaign.encoder.variant_name().to_string(),
            encoder_digest: campaign.encoder.digest(),
        }
    }
}

#[derive(Debug)]
pub struct ArchiveIndex {
    dir: PathBuf,
    meta: ArchiveMeta,
    discoveries: Vec<Discovery>,
    goals: GoalSpace,
    ledger: Option<File>,
}

impl ArchiveIndex {
    /// Creates a new archive. Fails if `dir` already holds one.
    pub fn create(dir: impl AsRef<Path>, meta: ArchiveMeta) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let meta_path = dir.join(META_FILE);
        if meta_path.exists() {
            return Err(Error::Archive(format!("{} already contains an archive", dir.display())));
        }
        let text = serde_json::to_string_pretty(&meta)?;
        let tmp = dir.join(format!("{META_FILE}.tmp"));
        fs::write(&tmp, text + "\n")?;
        fs::rename(&tmp, &meta_path)?;
        let ledger = OpenOptions::new().create(true).append(true).open(dir.join(LEDGER_FILE))?;
        ledger.sync_all()?;
        let goals = GoalSpace::new(meta.goal_names.clone(), meta.campaign.goal_expansion);
        Ok(Self { dir, meta, discoveries: Vec::new(), goals, ledger: Some(ledger) })
    }

    /// Opens an archive for appending, truncating a torn trailing record.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let mut index = Self::load(dir.as_ref(), true)?;
        let ledger = OpenOptions::new().append(true).open(index.dir.join(LEDGER_FILE))?;
        index.ledger = Some(ledger);
        Ok(index)
    }

    /// Opens an archive without write access; a torn trailing record is
    /// ignored but left in place.
    pub fn open_read_only(dir: impl AsRef<Path>) -> Result<Self> {
        Self::load(dir.as_ref(), false)
    }

    fn load(dir: &Path, repair: bool) -> Result<Self> {
        let meta_path = dir.join(META_FILE);
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| {
            Error::Archive(format!("cannot read {}: {e}", meta_path.display()))
        })?;
        let meta: ArchiveMeta = serde_json::from_str(&meta_text)
            .map_err(|e| Error::Archive(format!("malformed {}: {e}", meta_path.display())))?;
        if meta.format != FORMAT_VERSION {
            return Err(Error::Archive(format!("unsupported archive format {}", meta.format)));
        }

        let ledger_path = dir.join(LEDGER_FILE);
        let file = File::open(&ledger_path)?;
        let mut reader = BufReader::new(file);
        let mut discoveries: Vec<Discovery> = Vec::new();
        let mut good_len = 0u64;
        let mut line = String::new();
        loop {
            line.clear();
            let read = reader.read_line(&mut line)?;
            if read == 0 {
                break;
            }
            if !line.ends_with('\n') {
                // torn final write
                break;
            }
            let record: Discovery = match serde_json::from_str(line.trim_end()) {
                Ok(r) => r,
                Err(e) => {
                    let mut rest = String::new();
                    reader.read_line(&mut rest)?;
                    if rest.is_empty() {
                        break;
                    }
                    return Err(Error::Archive(format!(
                        "corrupt ledger record {} in {}: {e}",
                        discoveries.len(),
                        ledger_path.display()
                    )));
                }
            };
            check_next(&discoveries, &record, meta.goal_names.len())?;
            discoveries.push(record);
            good_len += read as u64;
        }
        if repair {
            let file = OpenOptions::new().write(true).open(&ledger_path)?;
            if file.metadata()?.len() != good_len {
                file.set_len(good_len)?;
                file.sync_all()?;
            }
        }

        let goals = GoalSpace::from_goals(
            meta.goal_names.clone(),
            meta.campaign.goal_expansion,
            discoveries.iter().filter_map(|d| d.goal.as_deref()),
        );
        Ok(Self { dir: dir.to_path_buf(), meta, discoveries, goals, ledger: None })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn meta(&self) -> &ArchiveMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.discoveries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.discoveries.is_empty()
    }

    pub fn discoveries(&self) -> &[Discovery] {
        &self.discoveries
    }

    pub fn get(&self, id: u64) -> Option<&Discovery> {
        self.discoveries.get(usize::try_from(id).ok()?)
    }

    /// Running bounds over every successful goal.
    pub fn goal_space(&self) -> &GoalSpace {
        &self.goals
    }

    /// Reached goals of successful discoveries, in id order.
    pub fn goals(&self) -> Vec<&[f64]> {
        self.discoveries.iter().filter_map(|d| d.goal.as_deref()).collect()
    }

    /// Chain of ids from `id` back to its parent-free ancestor.
    pub fn lineage(&self, id: u64) -> Option<Vec<u64>> {
        let mut chain = vec![id];
        let mut cur = self.get(id)?;
        while let Some(p) = cur.parent {
            chain.push(p);
            cur = self.get(p)?;
        }
        Some(chain)
    }

    /// Appends a record durably. The id must be the next one and the parent,
    /// if any, must already exist.
    pub fn append(&mut self, discovery: Discovery) -> Result<()> {
        let ledger = self
            .ledger
            .as_mut()
            .ok_or_else(|| Error::Archive("archive was opened read-only".into()))?;
        check_next(&self.discoveries, &discovery, self.meta.goal_names.len())?;
        let mut line = serde_json::to_string(&discovery)?;
        line.push('\n');
        ledger.seek(SeekFrom::End(0))?;
        ledger.write_all(line.as_bytes())?;
        ledger.flush()?;
        ledger.sync_data()?;
        if let Some(g) = &discovery.goal {
            self.goals.observe(g);
        }
        self.discoveries.push(discovery);
        Ok(())
    }

    /// Directory for the artifacts of discovery `id`, created on demand.
    pub fn run_dir(&self, id: u64) -> Result<PathBuf> {
        let path = self.dir.join(run_dir_name(id));
        fs::create_dir_all(&path)?;
        Ok(path)
    }
}

pub fn run_dir_name(id: u64) -> String {
    format!("runs/{id:06}")
}

fn check_next(existing: &[Discovery], d: &Discovery, goal_dims: usize) -> Result<()> {
    let expected = existing.len() as u64;
    if d.id != expected {
        return Err(Error::Archive(format!("expected discovery id {expected}, got {}", d.id)));
    }
    if let Some(p) = d.parent {
        if p >= d.id {
            return Err(Error::Archive(format!("discovery {} names unknown parent {p}", d.id)));
        }
    }
    match (&d.goal, &d.failure) {
        (Some(g), None) if g.len() == goal_dims && g.iter().all(|v| v.is_finite()) => Ok(()),
        (None, Some(_)) => Ok(()),
        _ => Err(Error::Archive(format!(
            "discovery {} must carry either a finite {goal_dims}-D goal or a failure",
            d.id
        ))),
    }
}
