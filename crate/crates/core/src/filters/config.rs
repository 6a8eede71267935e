//! Filter activation matrix, thresholds and word lists.
//!
//! The configuration file is TOML:
//!
//! ```toml
//! fallback = "Web CC"                 # subset for documents matching no row
//! bullet_prefixes = ["-", "*", "•", "·"]
//!
//! [params]                            # global threshold overrides
//! document_length_min_chars = 50
//!
//! [lists]                             # paths are relative to the config file
//! stopwords = { sv = "sv_stop.txt" }
//! flagged_words = { en = "en_flagged.tsv" }
//! url_domains = "domains.txt"
//!
//! [subsets.Books]
//! filters = [1, 4, 5, 7, 8, 9, 10, 11, 12, 13, 14, 15]
//!
//! [subsets.Articles]
//! uses = "Books"                      # copy another row; may add `params`
//! ```
//!
//! A document is matched by its source first, then by its category.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::FilterId;
use crate::document::Document;
use crate::wordlists::{self, WordListError};

const DEFAULT_CONFIG: &str = include_str!("../../config/default_filters.toml");

/// Filter thresholds. Comparisons follow the filter descriptions: "max" values are
/// strict upper bounds, "min" values inclusive lower bounds unless documented otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub alpha_present_min_fraction: f64,
    pub digit_fraction_max: f64,
    /// Strict: passes iff `num_chars > document_length_min_chars`.
    pub document_length_min_chars: u64,
    pub ellipsis_word_ratio_max: f64,
    pub flagged_max_total: u64,
    pub flagged_max_unique: u64,
    /// Weight sum must stay below `num_words / flagged_words_per_weight`.
    pub flagged_words_per_weight: f64,
    pub hashtag_word_ratio_max: f64,
    pub bullet_line_fraction_max: f64,
    pub bullet_min_lines: u64,
    /// Strict: MeanMed of characters per line must exceed this.
    pub mean_line_min_chars: f64,
    pub mean_line_min_words: f64,
    pub mean_word_length_min: f64,
    pub mean_word_length_max: f64,
    pub bsp_ngram: usize,
    pub bsp_min_ngrams: usize,
    pub bsp_word_ratio_max: f64,
    pub bsp_char_ratio_max: f64,
    pub gopher_dup_line_fraction: f64,
    pub gopher_dup_paragraph_fraction: f64,
    pub gopher_dup_line_char_fraction: f64,
    pub gopher_dup_paragraph_char_fraction: f64,
    /// For 2-, 3- and 4-grams.
    pub gopher_top_ngram_char_fraction: [f64; 3],
    /// For 5- through 10-grams.
    pub gopher_dup_ngram_char_fraction: [f64; 6],
    pub stop_word_min_count: u64,
    pub stop_word_min_fraction: f64,
    pub supported_languages: Vec<String>,
    pub trailing_ellipsis_fraction_max: f64,
    pub trailing_ellipsis_min_lines: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            alpha_present_min_fraction: 0.8,
            digit_fraction_max: 0.2,
            document_length_min_chars: 50,
            ellipsis_word_ratio_max: 0.1,
            flagged_max_total: 4,
            flagged_max_unique: 3,
            flagged_words_per_weight: 100.0,
            hashtag_word_ratio_max: 0.1,
            bullet_line_fraction_max: 0.9,
            bullet_min_lines: 3,
            mean_line_min_chars: 9.0,
            mean_line_min_words: 2.1,
            mean_word_length_min: 2.0,
            mean_word_length_max: 10.0,
            bsp_ngram: 5,
            bsp_min_ngrams: 10,
            bsp_word_ratio_max: 0.3,
            bsp_char_ratio_max: 0.3,
            gopher_dup_line_fraction: 0.35,
            gopher_dup_paragraph_fraction: 0.35,
            gopher_dup_line_char_fraction: 0.20,
            gopher_dup_paragraph_char_fraction: 0.20,
            gopher_top_ngram_char_fraction: [0.25, 0.23, 0.21],
            gopher_dup_ngram_char_fraction: [0.20, 0.19, 0.18, 0.17, 0.16, 0.15],
            stop_word_min_count: 2,
            stop_word_min_fraction: 0.1,
            supported_languages: wordlists::SUPPORTED_LANGUAGES.iter().map(|s| s.to_string()).collect(),
            trailing_ellipsis_fraction_max: 0.3,
            trailing_ellipsis_min_lines: 3,
        }
    }
}

impl Params {
    /// Thresholds of the thirteen repetition measurements, in table order.
    pub fn gopher_thresholds(&self) -> [f64; 13] {
        let mut out = [0.0; 13];
        out[0] = self.gopher_dup_line_fraction;
        out[1] = self.gopher_dup_paragraph_fraction;
        out[2] = self.gopher_dup_line_char_fraction;
        out[3] = self.gopher_dup_paragraph_char_fraction;
        out[4..7].copy_from_slice(&self.gopher_top_ngram_char_fraction);
        out[7..].copy_from_slice(&self.gopher_dup_ngram_char_fraction);
        out
    }

    fn overlay(&self, overrides: &toml::Table) -> Result<Params, toml::de::Error> {
        let mut table = toml::Table::try_from(self).expect("params serialize to a table");
        for (k, v) in overrides {
            table.insert(k.clone(), v.clone());
        }
        toml::Value::Table(table).try_into()
    }
}

/// Active filters and effective thresholds for one subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRule {
    pub filters: BTreeSet<FilterId>,
    pub params: Params,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UrlBlacklist {
    /// Lowercase domains; subdomains of a listed domain also match.
    pub domains: HashSet<String>,
    /// Lowercase extensions including the leading dot.
    pub extensions: HashSet<String>,
    pub urls: HashSet<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing filter config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("subset {subset:?}: {message}")]
    Subset { subset: String, message: String },
    #[error("fallback subset {0:?} is not defined")]
    MissingFallback(String),
    #[error("word list {path}: {source}")]
    WordList {
        path: PathBuf,
        #[source]
        source: WordListError,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    fallback: Option<String>,
    bullet_prefixes: Option<Vec<String>>,
    #[serde(default)]
    params: toml::Table,
    #[serde(default)]
    lists: RawLists,
    #[serde(default)]
    subsets: BTreeMap<String, RawSubset>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLists {
    #[serde(default)]
    stopwords: BTreeMap<String, PathBuf>,
    #[serde(default)]
    flagged_words: BTreeMap<String, PathBuf>,
    url_domains: Option<PathBuf>,
    url_extensions: Option<PathBuf>,
    url_full: Option<PathBuf>,
    #[serde(default)]
    blacklisted_domains: Vec<String>,
    #[serde(default)]
    blacklisted_extensions: Vec<String>,
    #[serde(default)]
    blacklisted_urls: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubset {
    filters: Option<Vec<FilterId>>,
    uses: Option<String>,
    #[serde(default)]
    params: toml::Table,
}

/// Immutable filter configuration, shared read-only by all workers.
#[derive(Debug)]
pub struct FilterConfig {
    subsets: BTreeMap<String, SubsetRule>,
    fallback: String,
    pub params: Params,
    pub stopwords: BTreeMap<String, HashSet<String>>,
    pub flagged_words: BTreeMap<String, HashMap<String, f64>>,
    pub url_blacklist: UrlBlacklist,
    pub bullet_prefixes: Vec<String>,
    all_stopwords: HashSet<String>,
    all_flagged: HashMap<String, f64>,
    warned: Mutex<HashSet<String>>,
}

/// Subset keys compare case-insensitively with spaces and dashes folded to underscores,
/// so "Web CC", "web_cc" and "web-cc" name the same row.
pub fn subset_key(name: &str) -> String {
    name.trim().to_lowercase().replace([' ', '-'], "_")
}

impl Default for FilterConfig {
    /// The shipped activation matrix with default thresholds and word lists.
    fn default() -> Self {
        FilterConfig::from_toml_str(DEFAULT_CONFIG, Path::new(".")).expect("shipped filter config is valid")
    }
}

impl FilterConfig {
    pub fn shipped_toml() -> &'static str {
        DEFAULT_CONFIG
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        FilterConfig::from_toml_str(&text, base)
    }

    /// Parses a configuration; relative list paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let params = Params::default().overlay(&raw.params)?;

        let raw_subsets: BTreeMap<String, (String, RawSubset)> =
            raw.subsets.into_iter().map(|(name, s)| (subset_key(&name), (name, s))).collect();
        let mut subsets = BTreeMap::new();
        for key in raw_subsets.keys() {
            let rule = resolve_subset(key, &raw_subsets, &params, &mut Vec::new())?;
            subsets.insert(key.clone(), rule);
        }
        let fallback = subset_key(raw.fallback.as_deref().unwrap_or("Web CC"));
        if !subsets.contains_key(&fallback) {
            return Err(ConfigError::MissingFallback(fallback));
        }

        let read = |p: &Path| -> Result<String, ConfigError> {
            let full = base_dir.join(p);
            fs::read_to_string(&full).map_err(|source| ConfigError::Io { path: full, source })
        };

        let mut stopwords = wordlists::default_stopwords();
        for (lang, path) in &raw.lists.stopwords {
            stopwords.insert(lang.clone(), wordlists::parse_word_list(&read(path)?));
        }
        let mut flagged_words = wordlists::default_flagged_words();
        for (lang, path) in &raw.lists.flagged_words {
            let list = wordlists::parse_weighted_list(&read(path)?)
                .map_err(|source| ConfigError::WordList { path: base_dir.join(path), source })?;
            flagged_words.insert(lang.clone(), list);
        }

        let mut url_blacklist = UrlBlacklist::default();
        let mut domains = raw.lists.blacklisted_domains;
        let mut extensions = raw.lists.blacklisted_extensions;
        let mut urls = raw.lists.blacklisted_urls;
        for (file, target) in [
            (&raw.lists.url_domains, &mut domains),
            (&raw.lists.url_extensions, &mut extensions),
            (&raw.lists.url_full, &mut urls),
        ] {
            if let Some(path) = file {
                target.extend(wordlists::parse_word_list(&read(path)?));
            }
        }
        url_blacklist.domains = domains.iter().map(|d| d.trim().trim_start_matches('.').to_lowercase()).collect();
        url_blacklist.extensions = extensions
            .iter()
            .map(|e| {
                let e = e.trim().to_lowercase();
                if e.starts_with('.') { e } else { format!(".{e}") }
            })
            .collect();
        url_blacklist.urls = urls.iter().map(|u| u.trim().to_string()).collect();

        let bullet_prefixes = raw
            .bullet_prefixes
            .unwrap_or_else(|| ["-", "*", "•", "·"].iter().map(|s| s.to_string()).collect());

        Ok(FilterConfig::assemble(subsets, fallback, params, stopwords, flagged_words, url_blacklist, bullet_prefixes))
    }

    fn assemble(
        subsets: BTreeMap<String, SubsetRule>,
        fallback: String,
        params: Params,
        stopwords: BTreeMap<String, HashSet<String>>,
        flagged_words: BTreeMap<String, HashMap<String, f64>>,
        url_blacklist: UrlBlacklist,
        bullet_prefixes: Vec<String>,
    ) -> Self {
        let all_stopwords = stopwords.values().flatten().cloned().collect();
        let mut all_flagged = HashMap::new();
        for list in flagged_words.values() {
            for (w, &weight) in list {
                let e = all_flagged.entry(w.clone()).or_insert(weight);
                *e = f64::max(*e, weight);
            }
        }
        FilterConfig {
            subsets,
            fallback,
            params,
            stopwords,
            flagged_words,
            url_blacklist,
            bullet_prefixes,
            all_stopwords,
            all_flagged,
            warned: Mutex::new(HashSet::new()),
        }
    }

    /// Replaces per-language stop-word and flagged-word lists with files; relative paths
    /// resolve against `base_dir`.
    pub fn with_word_lists(
        self,
        stopwords: &BTreeMap<String, PathBuf>,
        flagged_words: &BTreeMap<String, PathBuf>,
        base_dir: &Path,
    ) -> Result<Self, ConfigError> {
        let FilterConfig {
            subsets, fallback, params, stopwords: mut stop, flagged_words: mut flagged, url_blacklist, bullet_prefixes, ..
        } = self;
        for (lang, path) in stopwords {
            let full = base_dir.join(path);
            let text = fs::read_to_string(&full).map_err(|source| ConfigError::Io { path: full.clone(), source })?;
            stop.insert(lang.clone(), wordlists::parse_word_list(&text));
        }
        for (lang, path) in flagged_words {
            let full = base_dir.join(path);
            let text = fs::read_to_string(&full).map_err(|source| ConfigError::Io { path: full.clone(), source })?;
            let list = wordlists::parse_weighted_list(&text).map_err(|source| ConfigError::WordList { path: full, source })?;
            flagged.insert(lang.clone(), list);
        }
        Ok(FilterConfig::assemble(subsets, fallback, params, stop, flagged, url_blacklist, bullet_prefixes))
    }

    pub fn subset_names(&self) -> impl Iterator<Item = &str> {
        self.subsets.keys().map(String::as_str)
    }

    pub fn subset(&self, name: &str) -> Option<&SubsetRule> {
        self.subsets.get(&subset_key(name))
    }

    pub fn fallback_name(&self) -> &str {
        &self.fallback
    }

    /// Name of the row a document resolves to: its source if configured, else its
    /// category, else the fallback row.
    pub fn resolve_name(&self, source: &str, category: crate::document::Category) -> &str {
        for key in [subset_key(source), subset_key(category.name())] {
            if let Some((k, _)) = self.subsets.get_key_value(&key) {
                return k;
            }
        }
        let mut warned = self.warned.lock().unwrap_or_else(|e| e.into_inner());
        if warned.insert(category.name().to_string()) {
            log::warn!(
                "no filter configuration for source {source:?} or category {category}; using {:?}",
                self.fallback
            );
        }
        &self.fallback
    }

    pub fn rule_for(&self, doc: &Document) -> &SubsetRule {
        &self.subsets[self.resolve_name(&doc.source, doc.category)]
    }

    /// Stop words for a language, or the union of all lists for unsupported languages.
    pub fn stopwords_for(&self, lang: &str) -> &HashSet<String> {
        self.stopwords.get(lang).unwrap_or(&self.all_stopwords)
    }

    /// Flagged words for a language, or the union (max weight) for unsupported languages.
    pub fn flagged_for(&self, lang: &str) -> &HashMap<String, f64> {
        self.flagged_words.get(lang).unwrap_or(&self.all_flagged)
    }
}

fn resolve_subset(
    key: &str,
    raw: &BTreeMap<String, (String, RawSubset)>,
    global: &Params,
    stack: &mut Vec<String>,
) -> Result<SubsetRule, ConfigError> {
    let err = |message: String| ConfigError::Subset { subset: key.to_string(), message };
    if stack.iter().any(|k| k == key) {
        return Err(err(format!("cyclic `uses` chain: {}", stack.join(" -> "))));
    }
    let (_, subset) = raw.get(key).ok_or_else(|| err("referenced but not defined".into()))?;
    let base = match (&subset.filters, &subset.uses) {
        (Some(_), Some(_)) => return Err(err("set either `filters` or `uses`, not both".into())),
        (None, None) => return Err(err("needs `filters` or `uses`".into())),
        (Some(filters), None) => SubsetRule { filters: filters.iter().copied().collect(), params: global.clone() },
        (None, Some(target)) => {
            stack.push(key.to_string());
            let rule = resolve_subset(&subset_key(target), raw, global, stack)?;
            stack.pop();
            rule
        }
    };
    let params = base.params.overlay(&subset.params)?;
    Ok(SubsetRule { filters: base.filters, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Category;

    fn ids(indices: &[u8]) -> BTreeSet<FilterId> {
        indices.iter().map(|&i| FilterId::from_index(i).unwrap()).collect()
    }

    #[test]
    fn shipped_config_loads() {
        let cfg = FilterConfig::default();
        assert_eq!(cfg.params, Params::default());
        assert_eq!(cfg.fallback_name(), "web_cc");
        assert_eq!(cfg.subset("Code").unwrap().filters, ids(&[3, 4]));
        assert_eq!(cfg.bullet_prefixes, ["-", "*", "•", "·"]);
    }

    #[test]
    fn source_row_beats_category_row() {
        let cfg = FilterConfig::default();
        assert_eq!(cfg.resolve_name("ncc", Category::Miscellaneous), "ncc");
        assert_eq!(cfg.resolve_name("reddit", Category::Conversational), "conversational");
        assert_eq!(cfg.resolve_name("OPUS", Category::Miscellaneous), "opus");
        assert_eq!(cfg.resolve_name("someone", Category::Miscellaneous), "web_cc");
    }

    #[test]
    fn subset_params_override_globals() {
        let text = r#"
            fallback = "a"
            [params]
            document_length_min_chars = 10
            [subsets.a]
            filters = ["document_length"]
            [subsets.b]
            uses = "a"
            params = { document_length_min_chars = 99 }
        "#;
        let cfg = FilterConfig::from_toml_str(text, Path::new(".")).unwrap();
        assert_eq!(cfg.subset("a").unwrap().params.document_length_min_chars, 10);
        assert_eq!(cfg.subset("b").unwrap().params.document_length_min_chars, 99);
        assert_eq!(cfg.subset("b").unwrap().params.digit_fraction_max, 0.2);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let cyclic = "fallback = \"a\"\n[subsets.a]\nuses = \"b\"\n[subsets.b]\nuses = \"a\"\n";
        assert!(matches!(FilterConfig::from_toml_str(cyclic, Path::new(".")), Err(ConfigError::Subset { .. })));
        let missing_fallback = "fallback = \"zzz\"\n[subsets.a]\nfilters = [1]\n";
        assert!(matches!(
            FilterConfig::from_toml_str(missing_fallback, Path::new(".")),
            Err(ConfigError::MissingFallback(_))
        ));
        let unknown_param = "fallback = \"a\"\n[params]\nnot_a_param = 1\n[subsets.a]\nfilters = [1]\n";
        assert!(FilterConfig::from_toml_str(unknown_param, Path::new(".")).is_err());
        let bad_filter = "fallback = \"a\"\n[subsets.a]\nfilters = [16]\n";
        assert!(FilterConfig::from_toml_str(bad_filter, Path::new(".")).is_err());
    }

    #[test]
    fn list_files_resolve_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("fi.txt"), "ja\non\n").unwrap();
        fs::write(dir.path().join("domains.txt"), "Spam.Example\n").unwrap();
        fs::write(
            dir.path().join("cfg.toml"),
            "fallback = \"a\"\n[lists]\nstopwords = { fi = \"fi.txt\" }\nurl_domains = \"domains.txt\"\nblacklisted_extensions = [\"EXE\"]\n[subsets.a]\nfilters = [1]\n",
        )
        .unwrap();
        let cfg = FilterConfig::from_path(dir.path().join("cfg.toml")).unwrap();
        assert!(cfg.stopwords["fi"].contains("ja"));
        assert!(cfg.stopwords.contains_key("sv"));
        assert!(cfg.url_blacklist.domains.contains("spam.example"));
        assert!(cfg.url_blacklist.extensions.contains(".exe"));
    }
}
