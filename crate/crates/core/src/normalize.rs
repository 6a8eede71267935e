//! Stage 1: consistent text encoding.
//!
//! The three passes always run in this order: non-printing removal, whitespace
//! normalization, NFC composition.

use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::{is_nfc, UnicodeNormalization};

use crate::document::{Document, RemovalStage};

/// Strips control (Cc) and format (Cf) characters, keeping `\n` and `\t`.
///
/// Carriage returns are folded into line breaks first: `\r\n` becomes `\n`, a lone `\r`
/// becomes `\n`. A non-breaking space becomes an ordinary space.
pub fn remove_nonprinting(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\n' | '\t' => out.push(c),
            '\r' => {
                if chars.peek() != Some(&'\n') {
                    out.push('\n');
                }
            }
            '\u{00A0}' => out.push(' '),
            _ => match get_general_category(c) {
                GeneralCategory::Control | GeneralCategory::Format => {}
                _ => out.push(c),
            },
        }
    }
    out
}

/// Maps every whitespace character other than `\n` to U+0020.
pub fn normalize_whitespace(text: &str) -> String {
    text.chars()
        .map(|c| if c != '\n' && c.is_whitespace() { ' ' } else { c })
        .collect()
}

pub fn nfc_normalize(text: &str) -> String {
    if is_nfc(text) {
        text.to_string()
    } else {
        text.nfc().collect()
    }
}

/// Applies all three passes to a text.
pub fn normalize_text(text: &str) -> String {
    nfc_normalize(&normalize_whitespace(&remove_nonprinting(text)))
}

/// Normalizes the text of a document. Documents left with only whitespace are marked
/// as removed at this stage.
pub fn normalize_document(mut doc: Document) -> Document {
    doc.text = normalize_text(&doc.text);
    if doc.text.trim().is_empty() && doc.removed_stage.is_none() {
        doc.removed_stage = Some(RemovalStage::Normalize);
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Category;
    use proptest::prelude::*;

    #[test]
    fn soft_hyphen_is_removed() {
        assert_eq!(remove_nonprinting("a\u{00AD}b"), "ab");
    }

    #[test]
    fn clean_text_is_untouched() {
        assert_eq!(remove_nonprinting("plain text"), "plain text");
        assert_eq!(normalize_text("plain text"), "plain text");
    }

    #[test]
    fn bell_removed_and_nbsp_becomes_space() {
        assert_eq!(remove_nonprinting("x\u{0007}y\u{00A0}z"), "xy z");
    }

    #[test]
    fn format_characters_are_removed() {
        // zero-width space, byte order mark, left-to-right mark
        assert_eq!(remove_nonprinting("a\u{200B}b\u{FEFF}c\u{200E}d"), "abcd");
    }

    #[test]
    fn carriage_returns_become_line_breaks() {
        assert_eq!(remove_nonprinting("a\r\nb\rc"), "a\nb\nc");
    }

    #[test]
    fn tabs_and_unicode_spaces_become_space() {
        assert_eq!(normalize_whitespace("a\tb"), "a b");
        assert_eq!(normalize_whitespace("a\u{2003}b\nc"), "a b\nc");
        assert_eq!(normalize_whitespace(""), "");
    }

    #[test]
    fn nfc_composes() {
        assert_eq!(nfc_normalize("e\u{0301}"), "\u{00E9}");
        assert_eq!(nfc_normalize("abc"), "abc");
    }

    #[test]
    fn document_normalization_composes_passes() {
        let doc = normalize_document(Document::new("1", "a\u{00AD}\tb", "s", Category::WebCc));
        assert_eq!(doc.text, "a b");
        assert!(!doc.is_removed());

        let doc = normalize_document(Document::new("2", "clean", "s", Category::WebCc));
        assert_eq!(doc.text, "clean");
        assert!(!doc.is_removed());
    }

    #[test]
    fn empty_after_normalization_is_removed() {
        let doc = normalize_document(Document::new("1", "\u{00AD}", "s", Category::WebCc));
        assert_eq!(doc.text, "");
        assert_eq!(doc.removed_stage, Some(RemovalStage::Normalize));

        let doc = normalize_document(Document::new("2", " \u{200B}\t\n", "s", Category::WebCc));
        assert_eq!(doc.removed_stage, Some(RemovalStage::Normalize));
    }

    proptest! {
        #[test]
        fn nfc_is_idempotent(s in "\\PC{0,40}") {
            let once = nfc_normalize(&s);
            prop_assert_eq!(nfc_normalize(&once), once);
        }

        #[test]
        fn alphanumerics_survive(s in "[a-zA-Z0-9åäöæøÅÄÖÆØþðÞÐ \t\u{00AD}\u{200B}\u{0007}]{0,60}") {
            let kept: String = s.chars().filter(|c| c.is_alphanumeric()).collect();
            let out: String = normalize_text(&s).chars().filter(|c| c.is_alphanumeric()).collect();
            prop_assert_eq!(out, kept);
        }
    }
}
