//! Shipped word lists and their plain-text formats.
//!
//! Stop-word files hold one lowercase token per line. Flagged-word files hold
//! `word<TAB>weight` per line. In both, blank lines and lines starting with `#` are ignored.

use std::collections::{BTreeMap, HashMap, HashSet};

/// Languages the pipeline keeps, in tie-break order.
pub const SUPPORTED_LANGUAGES: [&str; 5] = ["da", "en", "is", "no", "sv"];

const STOPWORDS: [(&str, &str); 5] = [
    ("da", include_str!("../data/stopwords/da.txt")),
    ("en", include_str!("../data/stopwords/en.txt")),
    ("is", include_str!("../data/stopwords/is.txt")),
    ("no", include_str!("../data/stopwords/no.txt")),
    ("sv", include_str!("../data/stopwords/sv.txt")),
];

const FLAGGED: [(&str, &str); 5] = [
    ("da", include_str!("../data/flagged/da.tsv")),
    ("en", include_str!("../data/flagged/en.tsv")),
    ("is", include_str!("../data/flagged/is.tsv")),
    ("no", include_str!("../data/flagged/no.tsv")),
    ("sv", include_str!("../data/flagged/sv.tsv")),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WordListError {
    #[error("line {line}: expected `word<TAB>weight`")]
    MissingWeight { line: usize },
    #[error("line {line}: weight {weight:?} is not a number in [0, 1]")]
    BadWeight { line: usize, weight: String },
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_word_list(text: &str) -> HashSet<String> {
    content_lines(text).map(|(_, l)| l.to_lowercase()).collect()
}

pub fn parse_weighted_list(text: &str) -> Result<HashMap<String, f64>, WordListError> {
    let mut out = HashMap::new();
    for (line, l) in content_lines(text) {
        let (word, weight) = l
            .split_once('\t')
            .or_else(|| l.rsplit_once(' '))
            .ok_or(WordListError::MissingWeight { line })?;
        let weight_str = weight.trim();
        let w: f64 = weight_str
            .parse()
            .ok()
            .filter(|w: &f64| (0.0..=1.0).contains(w))
            .ok_or_else(|| WordListError::BadWeight { line, weight: weight_str.to_string() })?;
        out.insert(word.trim().to_lowercase(), w);
    }
    Ok(out)
}

pub fn default_stopwords() -> BTreeMap<String, HashSet<String>> {
    STOPWORDS
        .iter()
        .map(|(lang, text)| (lang.to_string(), parse_word_list(text)))
        .collect()
}

pub fn default_flagged_words() -> BTreeMap<String, HashMap<String, f64>> {
    FLAGGED
        .iter()
        .map(|(lang, text)| {
            let list = parse_weighted_list(text).expect("shipped flagged-word lists are valid");
            (lang.to_string(), list)
        })
        .collect()
}

/// Lowercases a whitespace token and strips surrounding punctuation, for list lookups.
pub fn lookup_form(token: &str) -> String {
    token.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_lists_cover_supported_languages() {
        let stop = default_stopwords();
        let flagged = default_flagged_words();
        for lang in SUPPORTED_LANGUAGES {
            assert!(stop[lang].len() > 50, "{lang} stop-word list too small");
            assert!(!flagged[lang].is_empty());
            assert!(stop[lang].iter().all(|w| *w == w.to_lowercase()));
        }
    }

    #[test]
    fn weighted_list_rejects_out_of_range_weights() {
        assert_eq!(
            parse_weighted_list("bad\t1.5"),
            Err(WordListError::BadWeight { line: 1, weight: "1.5".into() })
        );
        assert!(matches!(parse_weighted_list("noweight"), Err(WordListError::MissingWeight { line: 1 })));
        let ok = parse_weighted_list("# comment\n\nWord\t0.25\n").unwrap();
        assert_eq!(ok["word"], 0.25);
    }

    #[test]
    fn lookup_form_strips_punctuation() {
        assert_eq!(lookup_form("\"The,"), "the");
        assert_eq!(lookup_form("Är!"), "är");
        assert_eq!(lookup_form("..."), "");
    }
}
