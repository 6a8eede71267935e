//! Memory-bounded shard planning per language.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// How the shards of one language are deduplicated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DedupMode {
    /// Each shard on its own; duplicates across shards survive.
    #[default]
    Intra,
    /// Every pair of shards as one job, groups merged across jobs.
    Inter,
}

impl fmt::Display for DedupMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DedupMode::Intra => "intra",
            DedupMode::Inter => "inter",
        })
    }
}

impl FromStr for DedupMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "intra" => Ok(DedupMode::Intra),
            "inter" => Ok(DedupMode::Inter),
            other => Err(format!("unknown dedup mode {other:?} (expected intra or inter)")),
        }
    }
}

/// Memory budget for one deduplication job. Inter-shard shards get half of it, since a
/// job holds two shards at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardCaps {
    pub max_job_bytes: u64,
}

impl Default for ShardCaps {
    fn default() -> Self {
        ShardCaps { max_job_bytes: 80_000_000_000 }
    }
}

impl ShardCaps {
    pub fn shard_cap(&self, mode: DedupMode) -> u64 {
        match mode {
            DedupMode::Intra => self.max_job_bytes,
            DedupMode::Inter => self.max_job_bytes / 2,
        }
    }
}

/// One input file of a language subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardInput {
    pub name: String,
    pub source: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shard {
    pub id: usize,
    pub bytes: u64,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardPlan {
    pub language: String,
    pub mode: DedupMode,
    pub max_shard_bytes: u64,
    pub shards: Vec<Shard>,
}

impl ShardPlan {
    pub fn total_bytes(&self) -> u64 {
        self.shards.iter().map(|s| s.bytes).sum()
    }

    /// Number of pair jobs: `N(N-1)/2` in inter mode, one per shard otherwise.
    pub fn job_count(&self) -> usize {
        let n = self.shards.len();
        match self.mode {
            DedupMode::Inter if n >= 2 => n * (n - 1) / 2,
            _ => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("{language}: file {file} has {bytes} bytes, above the {cap}-byte shard cap; split it first")]
    FileTooLarge { language: String, file: String, bytes: u64, cap: u64 },
}

/// Packs each language's files into shards.
///
/// A language whose total fits in one job is a single intra shard regardless of its
/// configured mode. Otherwise files are packed in (source, name) order, opening a new
/// shard whenever the next file would overflow the cap, so files of one source stay
/// together.
pub fn plan_shards(
    inputs: &BTreeMap<String, Vec<ShardInput>>,
    modes: &BTreeMap<String, DedupMode>,
    caps: ShardCaps,
) -> Result<BTreeMap<String, ShardPlan>, PlanError> {
    let mut plans = BTreeMap::new();
    for (language, files) in inputs {
        let total: u64 = files.iter().map(|f| f.bytes).sum();
        let mode = if total <= caps.max_job_bytes {
            DedupMode::Intra
        } else {
            modes.get(language).copied().unwrap_or_default()
        };
        let cap = caps.shard_cap(mode);

        let mut ordered: Vec<&ShardInput> = files.iter().collect();
        ordered.sort_by(|a, b| (&a.source, &a.name).cmp(&(&b.source, &b.name)));

        let mut shards: Vec<Shard> = Vec::new();
        for file in ordered {
            if file.bytes > cap {
                return Err(PlanError::FileTooLarge {
                    language: language.clone(),
                    file: file.name.clone(),
                    bytes: file.bytes,
                    cap,
                });
            }
            match shards.last_mut() {
                Some(s) if s.bytes + file.bytes <= cap => {
                    s.bytes += file.bytes;
                    s.members.push(file.name.clone());
                }
                _ => shards.push(Shard { id: shards.len(), bytes: file.bytes, members: vec![file.name.clone()] }),
            }
        }
        plans.insert(language.clone(), ShardPlan { language: language.clone(), mode, max_shard_bytes: cap, shards });
    }
    Ok(plans)
}
