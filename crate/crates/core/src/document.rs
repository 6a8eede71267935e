//! Document data model shared by every pipeline stage.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::filters::FilterId;

/// Content category of a document's source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Articles,
    Books,
    Code,
    Conversational,
    Math,
    Miscellaneous,
    WebCc,
    WebSources,
    Wikipedia,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Articles,
        Category::Books,
        Category::Code,
        Category::Conversational,
        Category::Math,
        Category::Miscellaneous,
        Category::WebCc,
        Category::WebSources,
        Category::Wikipedia,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Articles => "Articles",
            Category::Books => "Books",
            Category::Code => "Code",
            Category::Conversational => "Conversational",
            Category::Math => "Math",
            Category::Miscellaneous => "Miscellaneous",
            Category::WebCc => "Web CC",
            Category::WebSources => "Web Sources",
            Category::Wikipedia => "Wikipedia",
        }
    }

    /// File-system friendly name, used for merged output files.
    pub fn slug(self) -> &'static str {
        match self {
            Category::Articles => "articles",
            Category::Books => "books",
            Category::Code => "code",
            Category::Conversational => "conversational",
            Category::Math => "math",
            Category::Miscellaneous => "miscellaneous",
            Category::WebCc => "web_cc",
            Category::WebSources => "web_sources",
            Category::Wikipedia => "wikipedia",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown category {0:?}")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    /// Accepts the display name ("Web CC") or the slug ("web_cc"), case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase();
        Category::ALL
            .into_iter()
            .find(|c| c.name().to_ascii_lowercase() == wanted || c.slug() == wanted)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Pipeline stage at which a document was removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalStage {
    Normalize,
    Filter,
    DedupExact,
    DedupFuzzy,
}

impl RemovalStage {
    pub fn name(self) -> &'static str {
        match self {
            RemovalStage::Normalize => "normalize",
            RemovalStage::Filter => "filter",
            RemovalStage::DedupExact => "dedup_exact",
            RemovalStage::DedupFuzzy => "dedup_fuzzy",
        }
    }
}

/// The six document-level metrics attached after normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMetrics {
    pub lang: String,
    pub num_chars: u64,
    pub num_utf8bytes: u64,
    pub num_words: u64,
    pub num_sents: u64,
    pub md5: String,
}

/// One text record with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source: String,
    pub category: Category,
    pub url: Option<String>,
    pub metrics: Option<DocumentMetrics>,
    pub filters_failed: Vec<FilterId>,
    pub removed_stage: Option<RemovalStage>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, source: impl Into<String>, category: Category) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            source: source.into(),
            category,
            url: None,
            metrics: None,
            filters_failed: Vec::new(),
            removed_stage: None,
        }
    }

    pub fn with_url(mut self, url: impl Into<String>) -> Self {
        self.url = Some(url.into());
        self
    }

    pub fn is_removed(&self) -> bool {
        self.removed_stage.is_some()
    }

    /// Language of the document, if metrics have been attached.
    pub fn lang(&self) -> Option<&str> {
        self.metrics.as_ref().map(|m| m.lang.as_str())
    }

    /// Size used for byte accounting: UTF-8 length of the text.
    pub fn text_bytes(&self) -> u64 {
        self.text.len() as u64
    }
}

// On-disk envelope. Field order here is the serialized order.

#[derive(Serialize, Deserialize)]
pub(crate) struct Record {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub text: String,
    #[serde(default)]
    pub meta: RecordMeta,
}

#[derive(Serialize, Deserialize, Default)]
pub(crate) struct RecordMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_chars: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_utf8bytes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_words: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_sents: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub md5: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filters_failed: Vec<FilterId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed_stage: Option<RemovalStage>,
}

impl From<&Document> for Record {
    fn from(doc: &Document) -> Self {
        let m = doc.metrics.as_ref();
        Record {
            id: Some(doc.id.clone()),
            text: doc.text.clone(),
            meta: RecordMeta {
                source: Some(doc.source.clone()),
                category: Some(doc.category),
                url: doc.url.clone(),
                lang: m.map(|m| m.lang.clone()),
                num_chars: m.map(|m| m.num_chars),
                num_utf8bytes: m.map(|m| m.num_utf8bytes),
                num_words: m.map(|m| m.num_words),
                num_sents: m.map(|m| m.num_sents),
                md5: m.map(|m| m.md5.clone()),
                filters_failed: doc.filters_failed.clone(),
                removed_stage: doc.removed_stage,
            },
        }
    }
}

impl Record {
    /// Builds a document, filling the id and source from the given fallbacks when absent.
    /// Metrics are attached only when all six are present.
    pub(crate) fn into_document(self, default_source: &str, ordinal: u64) -> Document {
        let meta = self.meta;
        let source = meta.source.unwrap_or_else(|| default_source.to_string());
        let id = match self.id {
            Some(id) if !id.is_empty() => id,
            _ => format!("{source}:{ordinal}"),
        };
        let metrics = match (meta.lang, meta.num_chars, meta.num_utf8bytes, meta.num_words, meta.num_sents, meta.md5) {
            (Some(lang), Some(num_chars), Some(num_utf8bytes), Some(num_words), Some(num_sents), Some(md5)) => {
                Some(DocumentMetrics { lang, num_chars, num_utf8bytes, num_words, num_sents, md5 })
            }
            _ => None,
        };
        Document {
            id,
            text: self.text,
            source,
            category: meta.category.unwrap_or(Category::Miscellaneous),
            url: meta.url,
            metrics,
            filters_failed: meta.filters_failed,
            removed_stage: meta.removed_stage,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_parses_names_and_slugs() {
        assert_eq!("Web CC".parse::<Category>().unwrap(), Category::WebCc);
        assert_eq!("web_cc".parse::<Category>().unwrap(), Category::WebCc);
        assert_eq!("wikipedia".parse::<Category>().unwrap(), Category::Wikipedia);
        assert!("Poetry".parse::<Category>().is_err());
    }

    #[test]
    fn missing_id_is_synthesized_from_source_and_ordinal() {
        let rec: Record = serde_json::from_str(r#"{"text":"hello","meta":{"source":"oscar"}}"#).unwrap();
        let doc = rec.into_document("fallback", 7);
        assert_eq!(doc.id, "oscar:7");
        assert_eq!(doc.category, Category::Miscellaneous);
        assert!(doc.metrics.is_none());
    }

    #[test]
    fn partial_metrics_are_dropped() {
        let rec: Record = serde_json::from_str(r#"{"text":"x","meta":{"lang":"en","num_chars":1}}"#).unwrap();
        assert!(rec.into_document("f", 0).metrics.is_none());
    }
}
