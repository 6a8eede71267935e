//! Repetition statistics behind the two repetition filters.
//!
//! All n-grams are over whitespace-delimited words. The character mass of a word
//! sequence is the sum of the character counts of its words (separators excluded).

use std::collections::{HashMap, HashSet};

use serde::Serialize;

fn char_len(word: &str) -> usize {
    word.chars().count()
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Word- and character-level repetition ratios over word n-grams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BspRatios {
    pub ngrams: usize,
    /// `1 - distinct / total` over n-gram occurrences.
    pub word_ratio: f64,
    /// `1 - mass(first occurrences of distinct n-grams) / mass(all occurrences)`.
    pub char_ratio: f64,
}

pub fn bsp_ratios(words: &[&str], n: usize) -> BspRatios {
    if n == 0 || words.len() < n {
        return BspRatios { ngrams: 0, word_ratio: 0.0, char_ratio: 0.0 };
    }
    let lens: Vec<usize> = words.iter().map(|w| char_len(w)).collect();
    let mut seen: HashSet<&[&str]> = HashSet::new();
    let (mut total_mass, mut first_mass) = (0usize, 0usize);
    let windows = words.windows(n);
    let ngrams = windows.len();
    for (i, gram) in windows.enumerate() {
        let mass: usize = lens[i..i + n].iter().sum();
        total_mass += mass;
        if seen.insert(gram) {
            first_mass += mass;
        }
    }
    BspRatios {
        ngrams,
        word_ratio: 1.0 - seen.len() as f64 / ngrams as f64,
        char_ratio: 1.0 - ratio(first_mass as f64, total_mass as f64),
    }
}

/// The thirteen repetition measurements of the Gopher-style filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GopherMeasures {
    pub dup_line_fraction: f64,
    pub dup_paragraph_fraction: f64,
    pub dup_line_char_fraction: f64,
    pub dup_paragraph_char_fraction: f64,
    /// For n = 2, 3, 4.
    pub top_ngram_char_fraction: [f64; 3],
    /// For n = 5 through 10.
    pub dup_ngram_char_fraction: [f64; 6],
}

impl GopherMeasures {
    pub fn compute(text: &str, words: &[&str]) -> Self {
        let lines: Vec<&str> = text.split('\n').map(str::trim).filter(|l| !l.is_empty()).collect();
        let paragraphs: Vec<&str> = text.split("\n\n").map(str::trim).filter(|p| !p.is_empty()).collect();
        let (dup_line_fraction, dup_line_char_fraction) = duplicate_fractions(&lines);
        let (dup_paragraph_fraction, dup_paragraph_char_fraction) = duplicate_fractions(&paragraphs);

        let lens: Vec<usize> = words.iter().map(|w| char_len(w)).collect();
        let total_mass: usize = lens.iter().sum();
        let mut top = [0.0; 3];
        for (slot, n) in top.iter_mut().zip(2..=4) {
            *slot = ratio(top_ngram_mass(words, &lens, n) as f64, total_mass as f64);
        }
        let mut dup = [0.0; 6];
        for (slot, n) in dup.iter_mut().zip(5..=10) {
            *slot = ratio(duplicate_ngram_mass(words, &lens, n) as f64, total_mass as f64);
        }
        GopherMeasures {
            dup_line_fraction,
            dup_paragraph_fraction,
            dup_line_char_fraction,
            dup_paragraph_char_fraction,
            top_ngram_char_fraction: top,
            dup_ngram_char_fraction: dup,
        }
    }

    /// The measurements in table order, labelled.
    pub fn labelled(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("dup_line_fraction".to_string(), self.dup_line_fraction),
            ("dup_paragraph_fraction".to_string(), self.dup_paragraph_fraction),
            ("dup_line_char_fraction".to_string(), self.dup_line_char_fraction),
            ("dup_paragraph_char_fraction".to_string(), self.dup_paragraph_char_fraction),
        ];
        for (i, v) in self.top_ngram_char_fraction.iter().enumerate() {
            out.push((format!("top_{}gram_char_fraction", i + 2), *v));
        }
        for (i, v) in self.dup_ngram_char_fraction.iter().enumerate() {
            out.push((format!("dup_{}gram_char_fraction", i + 5), *v));
        }
        out
    }

    pub fn values(&self) -> [f64; 13] {
        let mut out = [0.0; 13];
        out[0] = self.dup_line_fraction;
        out[1] = self.dup_paragraph_fraction;
        out[2] = self.dup_line_char_fraction;
        out[3] = self.dup_paragraph_char_fraction;
        out[4..7].copy_from_slice(&self.top_ngram_char_fraction);
        out[7..].copy_from_slice(&self.dup_ngram_char_fraction);
        out
    }
}

/// Fraction of items whose content appeared earlier, by count and by character mass.
fn duplicate_fractions(items: &[&str]) -> (f64, f64) {
    let mut seen = HashSet::new();
    let (mut dup_count, mut dup_mass, mut total_mass) = (0usize, 0usize, 0usize);
    for item in items {
        let mass = char_len(item);
        total_mass += mass;
        if !seen.insert(*item) {
            dup_count += 1;
            dup_mass += mass;
        }
    }
    (ratio(dup_count as f64, items.len() as f64), ratio(dup_mass as f64, total_mass as f64))
}

/// Occurrence count times character mass of the most frequent n-gram, or 0 when no
/// n-gram repeats. Ties on count go to the heavier n-gram, then the earliest.
fn top_ngram_mass(words: &[&str], lens: &[usize], n: usize) -> usize {
    if words.len() < n {
        return 0;
    }
    let mut counts: HashMap<&[&str], (usize, usize, usize)> = HashMap::new();
    for (i, gram) in words.windows(n).enumerate() {
        let entry = counts.entry(gram).or_insert_with(|| (0, lens[i..i + n].iter().sum(), i));
        entry.0 += 1;
    }
    counts
        .into_values()
        .filter(|(count, _, _)| *count >= 2)
        .max_by_key(|&(count, mass, first)| (count, mass, std::cmp::Reverse(first)))
        .map_or(0, |(count, mass, _)| count * mass)
}

/// Character mass of the words covered by n-gram occurrences whose content already
/// occurred at an earlier position. Each word is counted at most once.
fn duplicate_ngram_mass(words: &[&str], lens: &[usize], n: usize) -> usize {
    if words.len() < n {
        return 0;
    }
    let mut seen = HashSet::new();
    let mut covered = vec![false; words.len()];
    for (i, gram) in words.windows(n).enumerate() {
        if !seen.insert(gram) {
            covered[i..i + n].iter_mut().for_each(|c| *c = true);
        }
    }
    covered.iter().zip(lens).filter(|(c, _)| **c).map(|(_, l)| l).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn unique_text_has_no_repetition() {
        let text = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen";
        let w = words(text);
        assert_eq!(GopherMeasures::compute(text, &w).values(), [0.0; 13]);
        let bsp = bsp_ratios(&w, 5);
        assert_eq!((bsp.ngrams, bsp.word_ratio, bsp.char_ratio), (10, 0.0, 0.0));
    }

    #[test]
    fn repeated_phrase_is_highly_repetitive() {
        let text = "the cat sat on mats ".repeat(20);
        let bsp = bsp_ratios(&words(&text), 5);
        assert_eq!(bsp.ngrams, 96);
        // only five distinct rotations of the phrase exist
        assert!((bsp.word_ratio - (1.0 - 5.0 / 96.0)).abs() < 1e-12);
        assert!(bsp.char_ratio > 0.9);
    }

    #[test]
    fn duplicate_lines_count_repeat_occurrences() {
        let mut lines: Vec<String> = (0..10).map(|i| format!("unique line number {i}")).collect();
        lines.extend(std::iter::repeat_n("the same line".to_string(), 10));
        let text = lines.join("\n");
        let m = GopherMeasures::compute(&text, &words(&text));
        assert!((m.dup_line_fraction - 9.0 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn top_ngram_needs_two_occurrences() {
        let w = words("alpha beta gamma delta");
        let lens: Vec<usize> = w.iter().map(|x| x.len()).collect();
        assert_eq!(top_ngram_mass(&w, &lens, 2), 0);
        let w = words("aa bb cc aa bb");
        let lens: Vec<usize> = w.iter().map(|x| x.len()).collect();
        assert_eq!(top_ngram_mass(&w, &lens, 2), 8);
    }

    #[test]
    fn duplicate_ngram_mass_skips_first_occurrence() {
        let w = words("a b c d e a b c d e");
        let lens: Vec<usize> = w.iter().map(|x| x.len()).collect();
        assert_eq!(duplicate_ngram_mass(&w, &lens, 5), 5);
    }
}
