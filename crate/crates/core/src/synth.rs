//! Deterministic synthetic corpora with known ground truth.
//!
//! Text is built from pseudo-words that appear in no word list, mixed with stop words
//! that belong to exactly one supported language, so the baseline identifier assigns
//! the intended language and clean documents pass every filter.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::document::{Category, Document};
use crate::wordlists::{default_flagged_words, default_stopwords, SUPPORTED_LANGUAGES};

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ter", "san", "vo", "ri", "del", "mu", "nor", "pa", "sel", "ti", "van", "gor", "le", "bra", "ku",
    "sti", "fen", "ro", "mal", "di", "hul",
];

/// Word generator for one fixture.
pub struct TextGen {
    rng: ChaCha8Rng,
    vocab: Vec<String>,
    stopwords: BTreeMap<String, Vec<String>>,
}

impl TextGen {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lists = default_stopwords();
        let flagged = default_flagged_words();
        let mut reserved: HashSet<String> = lists.values().flatten().cloned().collect();
        reserved.extend(flagged.values().flat_map(|m| m.keys().cloned()));

        let mut vocab = Vec::new();
        let mut seen = HashSet::new();
        while vocab.len() < 4000 {
            let n = rng.random_range(2..=4);
            let w: String = (0..n).map(|_| *SYLLABLES.choose(&mut rng).expect("non-empty")).collect();
            if !reserved.contains(&w) && seen.insert(w.clone()) {
                vocab.push(w);
            }
        }

        let mut stopwords = BTreeMap::new();
        for &lang in SUPPORTED_LANGUAGES.iter() {
            let others: HashSet<&String> =
                lists.iter().filter(|(l, _)| l.as_str() != lang).flat_map(|(_, s)| s.iter()).collect();
            let mut own: Vec<String> = lists[lang].iter().filter(|w| !others.contains(w)).cloned().collect();
            own.sort();
            stopwords.insert(lang.to_string(), own);
        }
        TextGen { rng, vocab, stopwords }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn content_word(&mut self) -> String {
        self.vocab.choose(&mut self.rng).expect("non-empty").clone()
    }

    fn word(&mut self, lang: Option<&str>) -> String {
        match lang {
            Some(l) if self.rng.random_bool(0.35) => self.stopwords[l].choose(&mut self.rng).expect("non-empty").clone(),
            _ => self.content_word(),
        }
    }

    /// One sentence of 8 to 16 words ending in a period. `None` gives text without stop
    /// words.
    pub fn sentence(&mut self, lang: Option<&str>) -> String {
        let n = self.rng.random_range(8..=16);
        let mut words: Vec<String> = (0..n).map(|_| self.word(lang)).collect();
        let first = &mut words[0];
        if let Some(c) = first.chars().next() {
            *first = c.to_uppercase().chain(first.chars().skip(1)).collect();
        }
        words.join(" ") + "."
    }

    /// Prose of at least `min_chars` characters: lines of one to three sentences,
    /// grouped into paragraphs.
    pub fn prose(&mut self, lang: Option<&str>, min_chars: usize) -> String {
        let mut out = String::new();
        let mut lines_in_paragraph = 0;
        while out.chars().count() < min_chars {
            if !out.is_empty() {
                if lines_in_paragraph >= 3 {
                    out.push_str("\n\n");
                    lines_in_paragraph = 0;
                } else {
                    out.push('\n');
                }
            }
            let k = self.rng.random_range(1..=3);
            let line: Vec<String> = (0..k).map(|_| self.sentence(lang)).collect();
            out.push_str(&line.join(" "));
            lines_in_paragraph += 1;
        }
        out
    }

    /// Source-code-like text.
    pub fn code(&mut self, min_chars: usize) -> String {
        let mut out = String::new();
        while out.len() < min_chars {
            let name = self.content_word();
            let arg = self.content_word();
            let other = self.content_word();
            out.push_str(&format!("def {name}({arg}):\n    return {arg} + {other}({arg})\n\n"));
        }
        out
    }

    /// Replaces `count` distinct words with fresh content words, keeping whitespace and
    /// sentence-final periods.
    pub fn mutate_words(&mut self, text: &str, count: usize) -> String {
        let mut spans: Vec<(usize, usize)> = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices().chain([(text.len(), ' ')]) {
            match (c.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    spans.push((s, i));
                    start = None;
                }
                _ => {}
            }
        }
        let mut positions: Vec<usize> = (0..spans.len()).collect();
        let mut chosen = Vec::with_capacity(count);
        for _ in 0..count.min(spans.len()) {
            let i = self.rng.random_range(0..positions.len());
            chosen.push(positions.swap_remove(i));
        }
        chosen.sort_unstable();
        let mut out = String::with_capacity(text.len());
        let mut last = 0;
        for pos in chosen {
            let (s, e) = spans[pos];
            out.push_str(&text[last..s]);
            out.push_str(&self.content_word());
            if text[s..e].ends_with('.') {
                out.push('.');
            }
            last = e;
        }
        out.push_str(&text[last..]);
        out
    }
}

/// Expected per-stage removals for a fixture.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureTruth {
    pub documents: u64,
    pub malformed_lines: u64,
    pub normalize_removed: u64,
    pub filter_removed: u64,
    pub exact_removed: u64,
    pub fuzzy_removed: u64,
    pub survivors: u64,
}

/// Input files (name to lines) and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub files: BTreeMap<String, Vec<String>>,
    pub truth: FixtureTruth,
}

impl Fixture {
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, lines) in &self.files {
            let mut body = lines.join("\n");
            body.push('\n');
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

fn record(source: &str, category: Category, text: &str, url: Option<&str>) -> String {
    let mut meta = serde_json::json!({"source": source, "category": category.name()});
    if let Some(u) = url {
        meta["url"] = serde_json::json!(u);
    }
    serde_json::json!({"text": text, "meta": meta}).to_string()
}

/// The 500-document pipeline fixture.
///
/// Planted defects: 2 documents with no printable content, 20 short documents, 20
/// repetitive documents, 10 documents in no supported language, 5 blacklisted URLs,
/// 30 exact duplicates (10 identical only after normalization), 25 near duplicates of
/// long documents differing by one word, and one malformed line.
pub fn pipeline_fixture(seed: u64) -> Fixture {
    let mut g = TextGen::new(seed);
    let langs = ["da", "en", "is", "no", "sv"];
    let sources = [
        ("web", Category::WebCc),
        ("books", Category::Books),
        ("wiki", Category::Wikipedia),
        ("forum", Category::Conversational),
    ];
    let mut files: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut truth = FixtureTruth::default();
    let push = |files: &mut BTreeMap<String, Vec<String>>, source: &str, line: String| {
        files.entry(format!("{source}.jsonl")).or_default().push(line);
    };

    // Clean unique documents; the exact and near duplicates below copy some of them.
    let mut clean: Vec<(String, Category, String)> = Vec::new();
    for i in 0..348 {
        let (source, category) = sources[i % sources.len()];
        let lang = langs[i % langs.len()];
        let len = g.rng().random_range(400..1500);
        clean.push((source.to_string(), category, g.prose(Some(lang), len)));
    }
    let mut long: Vec<(String, Category, String)> = Vec::new();
    for i in 0..25 {
        let (source, category) = sources[i % 2];
        long.push((source.to_string(), category, g.prose(Some(langs[i % langs.len()]), 3000)));
    }
    for i in 0..15 {
        clean.push(("code".to_string(), Category::Code, g.code(300 + 40 * i)));
    }

    for (source, category, text) in clean.iter().chain(&long) {
        push(&mut files, source, record(source, *category, text, None));
    }
    truth.survivors = (clean.len() + long.len()) as u64;

    for (i, text) in ["   \n\t  ", "\u{00AD}\u{200B}"].iter().enumerate() {
        push(&mut files, sources[i].0, record(sources[i].0, sources[i].1, text, None));
        truth.normalize_removed += 1;
    }

    for i in 0..20 {
        let (source, category) = sources[i % sources.len()];
        let mut text = g.sentence(Some(langs[i % langs.len()]));
        text.truncate(text.char_indices().nth(40).map_or(text.len(), |(b, _)| b));
        push(&mut files, source, record(source, category, &text, None));
    }
    for i in 0..20 {
        let (source, category) = sources[i % 2];
        let line = g.sentence(Some(langs[i % langs.len()]));
        let text = vec![line; 15].join("\n");
        push(&mut files, source, record(source, category, &text, None));
    }
    for i in 0..10 {
        let (source, category) = sources[i % 2];
        let text = g.prose(None, 600);
        push(&mut files, source, record(source, category, &text, None));
    }
    for (i, &lang) in langs.iter().enumerate() {
        let text = g.prose(Some(lang), 600);
        let url = format!("https://downloads.example.com/files/setup{i}.exe");
        push(&mut files, "web", record("web", Category::WebCc, &text, Some(&url)));
    }
    truth.filter_removed = 20 + 20 + 10 + 5;

    for i in 0..30 {
        let (source, category, text) = clean[i * 7].clone();
        let copy = match i {
            0..5 => text.replace(' ', "\u{00A0}"),
            5..10 => text.replace('\n', "\r\n"),
            _ => text,
        };
        push(&mut files, &source, record(&source, category, &copy, None));
    }
    truth.exact_removed = 30;

    for (source, category, text) in &long {
        let copy = g.mutate_words(text, 1);
        push(&mut files, source, record(source, *category, &copy, None));
    }
    truth.fuzzy_removed = 25;

    push(&mut files, "forum", "{\"text\": \"unterminated".to_string());
    truth.malformed_lines = 1;

    truth.documents = files.values().map(|l| l.len() as u64).sum::<u64>() - truth.malformed_lines;
    Fixture { files, truth }
}

/// `n` single-language documents: unrelated bases plus variants with 1 to 60 percent
/// of their words replaced, some derived from other variants, so that true
/// similarities cover the whole range around the threshold.
pub fn near_duplicate_corpus(n: usize, seed: u64) -> Vec<Document> {
    let mut g = TextGen::new(seed);
    let mut docs: Vec<Document> = Vec::with_capacity(n);
    let fractions = [0.01, 0.03, 0.1, 0.2, 0.3, 0.45, 0.6];
    while docs.len() < n {
        let id = format!("d{:05}", docs.len());
        let make_variant = !docs.is_empty() && g.rng().random_bool(0.6);
        let text = if make_variant {
            let parent = g.rng().random_range(docs.len().saturating_sub(40)..docs.len());
            let parent_text = docs[parent].text.clone();
            let words = parent_text.split_whitespace().count();
            let f = *fractions.choose(g.rng()).expect("non-empty");
            g.mutate_words(&parent_text, ((words as f64) * f).ceil() as usize)
        } else {
            let len = g.rng().random_range(300..1200);
            g.prose(Some("sv"), len)
        };
        docs.push(Document::new(id, text, "synthetic", Category::WebCc));
    }
    docs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{evaluate_document, FilterConfig};
    use crate::langid::StopwordClassifier;
    use crate::metrics::annotate_metrics;

    #[test]
    fn fixture_is_deterministic() {
        assert_eq!(pipeline_fixture(3), pipeline_fixture(3));
        assert_ne!(pipeline_fixture(3).files, pipeline_fixture(4).files);
    }

    #[test]
    fn fixture_has_500_documents() {
        let f = pipeline_fixture(1);
        assert_eq!(f.truth.documents, 500);
        let t = &f.truth;
        assert_eq!(
            t.normalize_removed + t.filter_removed + t.exact_removed + t.fuzzy_removed + t.survivors,
            t.documents
        );
    }

    #[test]
    fn clean_prose_passes_filters_in_its_language() {
        let cfg = FilterConfig::default();
        let classifier = StopwordClassifier::default();
        let mut g = TextGen::new(5);
        for &lang in SUPPORTED_LANGUAGES.iter() {
            for category in [Category::WebCc, Category::Books, Category::Conversational] {
                let text = g.prose(Some(lang), 800);
                let doc = annotate_metrics(Document::new("x", text, "s", category), &classifier);
                assert_eq!(doc.lang(), Some(lang));
                let (doc, verdicts) = evaluate_document(doc, &cfg).unwrap();
                assert!(!doc.is_removed(), "{lang} {category:?}: {verdicts:?}");
            }
        }
    }

    #[test]
    fn mutation_changes_exactly_the_requested_words() {
        let mut g = TextGen::new(2);
        let text = g.prose(Some("en"), 500);
        let changed = g.mutate_words(&text, 3);
        let diff = text.split_whitespace().zip(changed.split_whitespace()).filter(|(a, b)| a != b).count();
        assert!((1..=3).contains(&diff));
        assert_eq!(text.split_whitespace().count(), changed.split_whitespace().count());
        assert_eq!(text.matches('\n').count(), changed.matches('\n').count());
    }
}
