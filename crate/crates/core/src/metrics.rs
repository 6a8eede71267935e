//! Stage 2: document-level metrics.

use md5::{Digest, Md5};

use crate::document::{Document, DocumentMetrics};
use crate::langid::{LanguageIdentifier, LanguageVerdict};

pub fn count_chars(text: &str) -> u64 {
    text.chars().count() as u64
}

pub fn count_utf8_bytes(text: &str) -> u64 {
    text.len() as u64
}

/// Number of maximal non-whitespace runs.
pub fn count_words(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Sentences are the segments between runs of `.`, `!` or `?` that are followed by
/// whitespace or the end of the text. Segments without any word are not counted.
pub fn count_sentences(text: &str) -> u64 {
    let bytes = text.as_bytes();
    let is_term = |b: u8| matches!(b, b'.' | b'!' | b'?');
    let has_word = |s: &str| s.chars().any(|c| !c.is_whitespace());

    let mut count = 0;
    let mut seg_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if is_term(bytes[i]) {
            let run_start = i;
            while i < bytes.len() && is_term(bytes[i]) {
                i += 1;
            }
            let at_boundary = text[i..].chars().next().is_none_or(char::is_whitespace);
            if at_boundary {
                if has_word(&text[seg_start..run_start]) {
                    count += 1;
                }
                seg_start = i;
            }
        } else {
            i += 1;
        }
    }
    if has_word(&text[seg_start..]) {
        count += 1;
    }
    count
}

/// Lowercase hexadecimal MD5 of the UTF-8 bytes.
pub fn md5_hex(text: &str) -> String {
    let digest = Md5::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn identify_language(classifier: &dyn LanguageIdentifier, text: &str) -> LanguageVerdict {
    if text.trim().is_empty() {
        return LanguageVerdict::undetermined();
    }
    classifier.identify(text)
}

pub fn compute_metrics(classifier: &dyn LanguageIdentifier, text: &str) -> DocumentMetrics {
    DocumentMetrics {
        lang: identify_language(classifier, text).lang,
        num_chars: count_chars(text),
        num_utf8bytes: count_utf8_bytes(text),
        num_words: count_words(text),
        num_sents: count_sentences(text),
        md5: md5_hex(text),
    }
}

/// Attaches all six metrics; the text is left unchanged.
pub fn annotate_metrics(mut doc: Document, classifier: &dyn LanguageIdentifier) -> Document {
    doc.metrics = Some(compute_metrics(classifier, &doc.text));
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Category;
    use crate::langid::StopwordClassifier;
    use proptest::prelude::*;

    #[test]
    fn char_and_byte_counts() {
        assert_eq!(count_chars("abc"), 3);
        assert_eq!(count_chars(""), 0);
        assert_eq!(count_chars("\u{00E9}"), 1);
        assert_eq!(count_utf8_bytes("abc"), 3);
        assert_eq!(count_utf8_bytes("\u{00E9}"), 2);
        assert_eq!(count_utf8_bytes(""), 0);
    }

    #[test]
    fn word_counts() {
        assert_eq!(count_words("a b  c"), 3);
        assert_eq!(count_words(""), 0);
        assert_eq!(count_words("hej, världen!"), 2);
    }

    #[test]
    fn sentence_counts() {
        assert_eq!(count_sentences("Hi. Bye!"), 2);
        assert_eq!(count_sentences(""), 0);
        assert_eq!(count_sentences("no terminator"), 1);
        assert_eq!(count_sentences("Pi is 3.14 roughly."), 1);
        assert_eq!(count_sentences("Wait... what?! Ok"), 3);
        assert_eq!(count_sentences("... !"), 0);
    }

    #[test]
    fn md5_reference_vectors() {
        assert_eq!(md5_hex(""), "d41d8cd98f00b204e9800998ecf8427e");
        assert_eq!(md5_hex("abc"), "900150983cd24fb0d6963f7d28e17f72");
    }

    #[test]
    fn annotate_small_document() {
        let clf = StopwordClassifier::default();
        let doc = annotate_metrics(Document::new("1", "abc", "s", Category::Books), &clf);
        let m = doc.metrics.clone().unwrap();
        assert_eq!((m.num_chars, m.num_utf8bytes, m.num_words, m.num_sents), (3, 3, 1, 1));
        assert_eq!(m.md5, "900150983cd24fb0d6963f7d28e17f72");
        assert_eq!(doc.text, "abc");
        let again = annotate_metrics(doc.clone(), &clf);
        assert_eq!(again, doc);
    }

    proptest! {
        #[test]
        fn metric_invariants(s in "\\PC{0,80}") {
            let clf = StopwordClassifier::default();
            let m = compute_metrics(&clf, &s);
            prop_assert!(m.num_utf8bytes >= m.num_chars);
            prop_assert_eq!(m.num_utf8bytes == m.num_chars, s.is_ascii());
            prop_assert_eq!(m.md5.len(), 32);
            prop_assert!(m.md5.chars().all(|c| matches!(c, '0'..='9' | 'a'..='f')));
            prop_assert!(m.num_sents <= m.num_words);
            prop_assert_eq!(&compute_metrics(&clf, &s), &m);
        }
    }
}
