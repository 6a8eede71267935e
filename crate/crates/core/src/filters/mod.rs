//! Stage 3: heuristic quality filters.
//!
//! Every filter active for a document's subset is evaluated, even after a failure, so a
//! document can be attributed to several filters. A document is removed iff any fails.

mod checks;
mod config;
pub mod repetition;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::document::{Document, RemovalStage};

pub use checks::run_filter;
pub use config::{ConfigError, FilterConfig, Params, SubsetRule, UrlBlacklist};

/// The fifteen quality filters, numbered as in the activation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FilterId {
    AlphaPresent = 1,
    BlacklistUrls = 2,
    DigitFraction = 3,
    DocumentLength = 4,
    EllipsisWordRatio = 5,
    FlaggedWords = 6,
    HashtagWordRatio = 7,
    InitialBullet = 8,
    MeanLineLength = 9,
    MeanWordLength = 10,
    RepetitiveBsp = 11,
    RepetitiveGopher = 12,
    StopWord = 13,
    SupportedLanguage = 14,
    TrailingEllipsis = 15,
}

impl FilterId {
    pub const ALL: [FilterId; 15] = [
        FilterId::AlphaPresent,
        FilterId::BlacklistUrls,
        FilterId::DigitFraction,
        FilterId::DocumentLength,
        FilterId::EllipsisWordRatio,
        FilterId::FlaggedWords,
        FilterId::HashtagWordRatio,
        FilterId::InitialBullet,
        FilterId::MeanLineLength,
        FilterId::MeanWordLength,
        FilterId::RepetitiveBsp,
        FilterId::RepetitiveGopher,
        FilterId::StopWord,
        FilterId::SupportedLanguage,
        FilterId::TrailingEllipsis,
    ];

    /// 1-based column index in the activation matrix.
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(index: u8) -> Option<FilterId> {
        FilterId::ALL.get(usize::from(index).checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FilterId::AlphaPresent => "alpha_present",
            FilterId::BlacklistUrls => "blacklist_urls",
            FilterId::DigitFraction => "digit_fraction",
            FilterId::DocumentLength => "document_length",
            FilterId::EllipsisWordRatio => "ellipsis_word_ratio",
            FilterId::FlaggedWords => "flagged_words",
            FilterId::HashtagWordRatio => "hashtag_word_ratio",
            FilterId::InitialBullet => "initial_bullet",
            FilterId::MeanLineLength => "mean_line_length",
            FilterId::MeanWordLength => "mean_word_length",
            FilterId::RepetitiveBsp => "repetitive_bsp",
            FilterId::RepetitiveGopher => "repetitive_gopher",
            FilterId::StopWord => "stop_word",
            FilterId::SupportedLanguage => "supported_language",
            FilterId::TrailingEllipsis => "trailing_ellipsis",
        }
    }
}

impl fmt::Display for FilterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown filter {0:?}")]
pub struct UnknownFilter(pub String);

impl FromStr for FilterId {
    type Err = UnknownFilter;

    /// Accepts the snake-case name or the 1-based index.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(i) = s.parse::<u8>() {
            return FilterId::from_index(i).ok_or_else(|| UnknownFilter(s.to_string()));
        }
        FilterId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| UnknownFilter(s.to_string()))
    }
}

impl Serialize for FilterId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for FilterId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Index(u8),
            Name(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Index(i) => FilterId::from_index(i)
                .ok_or_else(|| serde::de::Error::custom(format!("filter index {i} out of range 1..=15"))),
            Repr::Name(n) => n.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Outcome of one filter on one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub filter: FilterId,
    pub passed: bool,
    /// The statistic the filter compared against its threshold, when it has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
}

/// Precomputed views of a document's text shared by all filters.
#[derive(Debug)]
pub struct DocView<'a> {
    pub text: &'a str,
    pub url: Option<&'a str>,
    pub lang: &'a str,
    pub num_chars: u64,
    pub words: Vec<&'a str>,
    /// Lines containing at least one non-whitespace character.
    pub lines: Vec<&'a str>,
}

impl<'a> DocView<'a> {
    pub fn new(text: &'a str, url: Option<&'a str>, lang: &'a str) -> Self {
        DocView {
            text,
            url,
            lang,
            num_chars: text.chars().count() as u64,
            words: text.split_whitespace().collect(),
            lines: text.split('\n').filter(|l| !l.trim().is_empty()).collect(),
        }
    }

    pub fn of(doc: &'a Document) -> Self {
        DocView::new(&doc.text, doc.url.as_deref(), doc.lang().unwrap_or(crate::langid::UNDETERMINED))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error("document {0} has no metrics; run the metrics stage first")]
    MissingMetrics(String),
}

/// Runs every filter active for the document's subset.
///
/// Failed filter ids are appended to `filters_failed`, and `removed_stage` is set to
/// `filter` iff at least one failed. Verdicts come back in filter-index order.
pub fn evaluate_document(
    mut doc: Document,
    cfg: &FilterConfig,
) -> Result<(Document, Vec<FilterVerdict>), FilterError> {
    if doc.metrics.is_none() {
        return Err(FilterError::MissingMetrics(doc.id.clone()));
    }
    let rule = cfg.rule_for(&doc);
    let verdicts: Vec<FilterVerdict> = {
        let view = DocView::of(&doc);
        rule.filters.iter().map(|&id| run_filter(id, &view, &rule.params, cfg)).collect()
    };
    for v in verdicts.iter().filter(|v| !v.passed) {
        if !doc.filters_failed.contains(&v.filter) {
            doc.filters_failed.push(v.filter);
        }
    }
    if verdicts.iter().any(|v| !v.passed) && doc.removed_stage.is_none() {
        doc.removed_stage = Some(RemovalStage::Filter);
    }
    Ok((doc, verdicts))
}
