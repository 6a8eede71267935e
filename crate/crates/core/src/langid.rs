//! Pluggable document-level language identification.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::wordlists::{self, SUPPORTED_LANGUAGES};

/// Label for text whose language could not be determined.
pub const UNDETERMINED: &str = "und";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageVerdict {
    pub lang: String,
    pub confidence: f64,
}

impl LanguageVerdict {
    pub fn undetermined() -> Self {
        LanguageVerdict { lang: UNDETERMINED.to_string(), confidence: 0.0 }
    }
}

/// A document-level language classifier. Implementations must be usable from many threads.
pub trait LanguageIdentifier: Send + Sync {
    fn identify(&self, text: &str) -> LanguageVerdict;
}

/// Deterministic baseline: counts stop-word hits per language and returns the argmax.
///
/// Ties go to the language listed first in [`SUPPORTED_LANGUAGES`]. Confidence is the
/// winning hit count divided by the number of words.
#[derive(Debug, Clone)]
pub struct StopwordClassifier {
    lists: Vec<(String, HashSet<String>)>,
}

impl StopwordClassifier {
    pub fn new(lists: BTreeMap<String, HashSet<String>>) -> Self {
        // keep the supported languages in tie-break order, then anything else by code
        let mut ordered: Vec<(String, HashSet<String>)> = lists.into_iter().collect();
        ordered.sort_by_key(|(lang, _)| {
            let rank = SUPPORTED_LANGUAGES.iter().position(|l| l == lang).unwrap_or(usize::MAX);
            (rank, lang.clone())
        });
        StopwordClassifier { lists: ordered }
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.lists.iter().map(|(l, _)| l.as_str())
    }
}

impl Default for StopwordClassifier {
    fn default() -> Self {
        StopwordClassifier::new(wordlists::default_stopwords())
    }
}

impl LanguageIdentifier for StopwordClassifier {
    fn identify(&self, text: &str) -> LanguageVerdict {
        let tokens: Vec<String> = text.split_whitespace().map(wordlists::lookup_form).collect();
        if tokens.is_empty() {
            return LanguageVerdict::undetermined();
        }
        let mut best: Option<(&str, usize)> = None;
        for (lang, list) in &self.lists {
            let hits = tokens.iter().filter(|t| list.contains(t.as_str())).count();
            if hits > best.map_or(0, |(_, h)| h) {
                best = Some((lang, hits));
            }
        }
        match best {
            Some((lang, hits)) => LanguageVerdict {
                lang: lang.to_string(),
                confidence: (hits as f64 / tokens.len() as f64).min(1.0),
            },
            None => LanguageVerdict::undetermined(),
        }
    }
}
