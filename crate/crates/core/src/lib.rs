//! Corpus curation for language-model pre-training data.
//!
//! The pipeline runs seven stages over JSON Lines corpora: normalization, metric
//! annotation, quality filtering, exact deduplication, language segmentation, fuzzy
//! (MinHash-LSH) deduplication and merging. Each stage is usable on its own.

pub mod dedup_exact;
pub mod document;
pub mod filters;
pub mod fuzzy;
pub mod jsonl;
pub mod langid;
pub mod metrics;
pub mod normalize;
pub mod pipeline;
pub mod synth;
pub mod wordlists;

pub use document::{Category, Document, DocumentMetrics, RemovalStage};
pub use filters::{evaluate_document, FilterConfig, FilterId, FilterVerdict};
pub use langid::{LanguageIdentifier, LanguageVerdict, StopwordClassifier};
