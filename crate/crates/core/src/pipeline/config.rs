use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::filters::{ConfigError, FilterConfig};
use crate::fuzzy::{DedupMode, LshParams, LshParamsError, ShardCaps};

/// Run configuration, read from TOML.
///
/// ```toml
/// filters = "filters.toml"
/// seed = 7
///
/// [lists.stopwords]
/// sv = "lists/sv.txt"
///
/// [lsh]
/// jaccard_threshold = 0.5
///
/// [shards]
/// max_job_bytes = 80_000_000_000
/// modes = { da = "inter", en = "intra" }
///
/// [fuzzy]
/// skip = ["code"]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Filter matrix; the shipped matrix when absent.
    pub filters: Option<PathBuf>,
    /// Master seed for the MinHash family; overrides `lsh.master_seed`.
    pub seed: Option<u64>,
    /// Abort on malformed input lines instead of skipping them.
    pub strict: bool,
    pub lists: WordListPaths,
    pub lsh: LshParams,
    pub shards: ShardSettings,
    pub fuzzy: FuzzySettings,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WordListPaths {
    pub stopwords: BTreeMap<String, PathBuf>,
    pub flagged_words: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShardSettings {
    pub max_job_bytes: u64,
    /// Mode per language for languages above the job cap; unlisted languages use intra.
    pub modes: BTreeMap<String, DedupMode>,
}

impl Default for ShardSettings {
    fn default() -> Self {
        let modes = [("da", DedupMode::Inter), ("en", DedupMode::Intra), ("no", DedupMode::Inter), ("sv", DedupMode::Inter)]
            .into_iter()
            .map(|(l, m)| (l.to_string(), m))
            .collect();
        ShardSettings { max_job_bytes: ShardCaps::default().max_job_bytes, modes }
    }
}

impl ShardSettings {
    pub fn caps(&self) -> ShardCaps {
        ShardCaps { max_job_bytes: self.max_job_bytes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzySettings {
    /// Segments passed through stage 6 untouched.
    pub skip: Vec<String>,
}

impl Default for FuzzySettings {
    fn default() -> Self {
        FuzzySettings { skip: vec!["code".to_string()] }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            filters: None,
            seed: None,
            strict: false,
            lists: WordListPaths::default(),
            lsh: LshParams::default(),
            shards: ShardSettings::default(),
            fuzzy: FuzzySettings::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing run config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Filters(#[from] ConfigError),
    #[error(transparent)]
    Lsh(#[from] LshParamsError),
    #[error("max_job_bytes must be positive")]
    ZeroCap,
}

impl RunConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, RunConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| RunConfigError::Io { path: path.to_path_buf(), source })?;
        RunConfig::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, RunConfigError> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RunConfigError> {
        self.lsh_params().validate()?;
        if self.shards.max_job_bytes == 0 {
            return Err(RunConfigError::ZeroCap);
        }
        Ok(())
    }

    /// LSH parameters with `seed` applied.
    pub fn lsh_params(&self) -> LshParams {
        let lsh = self.lsh.clone();
        match self.seed {
            Some(seed) => lsh.with_seed(seed),
            None => lsh,
        }
    }

    /// Loads the filter matrix and applies word-list overrides.
    pub fn filter_config(&self) -> Result<FilterConfig, RunConfigError> {
        let cfg = match &self.filters {
            Some(path) => FilterConfig::from_path(self.base_dir.join(path))?,
            None => FilterConfig::default(),
        };
        Ok(cfg.with_word_lists(&self.lists.stopwords, &self.lists.flagged_words, &self.base_dir)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::from_toml_str("", Path::new(".")).unwrap();
        assert_eq!(cfg.lsh_params(), LshParams::default());
        assert_eq!(cfg.shards.modes["da"], DedupMode::Inter);
        assert_eq!(cfg.shards.modes["en"], DedupMode::Intra);
        assert_eq!(cfg.fuzzy.skip, ["code"]);
    }

    #[test]
    fn seed_overrides_lsh_seed() {
        let cfg = RunConfig::from_toml_str("seed = 9\n[lsh]\nmaster_seed = 3\n", Path::new(".")).unwrap();
        assert_eq!(cfg.lsh_params().master_seed, 9);
    }

    #[test]
    fn invalid_banding_is_rejected() {
        let err = RunConfig::from_toml_str("[lsh]\nbands = 3\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, RunConfigError::Lsh(_)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("sharding = 1\n", Path::new(".")).is_err());
    }

    #[test]
    fn word_list_override_is_applied() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("sv.txt"), "och\nfoo\n").unwrap();
        let cfg = RunConfig::from_toml_str("[lists.stopwords]\nsv = \"sv.txt\"\n", dir.path()).unwrap();
        let filters = cfg.filter_config().unwrap();
        assert!(filters.stopwords_for("sv").contains("foo"));
        assert_eq!(filters.stopwords_for("sv").len(), 2);
    }
}
