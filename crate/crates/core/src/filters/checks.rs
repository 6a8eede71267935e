use std::collections::HashSet;

use url::Url;

use super::config::{FilterConfig, Params, UrlBlacklist};
use super::repetition::{bsp_ratios, GopherMeasures};
use super::{DocView, FilterId, FilterVerdict};
use crate::wordlists::lookup_form;

/// Evaluates one filter. `params` are the effective thresholds of the document's subset.
pub fn run_filter(id: FilterId, view: &DocView<'_>, params: &Params, cfg: &FilterConfig) -> FilterVerdict {
    let (passed, measured) = match id {
        FilterId::AlphaPresent => alpha_present(view, params),
        FilterId::BlacklistUrls => (blacklist_urls(view.url, &cfg.url_blacklist), None),
        FilterId::DigitFraction => digit_fraction(view, params),
        FilterId::DocumentLength => {
            (view.num_chars > params.document_length_min_chars, Some(view.num_chars as f64))
        }
        FilterId::EllipsisWordRatio => ellipsis_word_ratio(view, params),
        FilterId::FlaggedWords => flagged_words(view, params, cfg),
        FilterId::HashtagWordRatio => hashtag_word_ratio(view, params),
        FilterId::InitialBullet => initial_bullet(view, params, &cfg.bullet_prefixes),
        FilterId::MeanLineLength => mean_line_length(view, params),
        FilterId::MeanWordLength => mean_word_length(view, params),
        FilterId::RepetitiveBsp => repetitive_bsp(view, params),
        FilterId::RepetitiveGopher => repetitive_gopher(view, params),
        FilterId::StopWord => stop_word(view, params, cfg),
        FilterId::SupportedLanguage => {
            (params.supported_languages.iter().any(|l| l == view.lang), None)
        }
        FilterId::TrailingEllipsis => trailing_ellipsis(view, params),
    };
    FilterVerdict { filter: id, passed, measured }
}

type Outcome = (bool, Option<f64>);

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Fraction of words containing at least one alphabetic character.
fn alpha_present(view: &DocView<'_>, p: &Params) -> Outcome {
    let alpha = view.words.iter().filter(|w| w.chars().any(char::is_alphabetic)).count();
    let r = ratio(alpha, view.words.len());
    (r >= p.alpha_present_min_fraction, Some(r))
}

/// Absent URLs pass. Otherwise the URL must parse with a host, and neither its domain
/// (or a parent domain), its path extension, nor the URL itself may be listed.
pub(crate) fn blacklist_urls(url: Option<&str>, list: &UrlBlacklist) -> bool {
    let Some(raw) = url else { return true };
    let raw = raw.trim();
    let Ok(parsed) = Url::parse(raw) else { return false };
    let Some(host) = parsed.host_str() else { return false };
    let host = host.trim_end_matches('.').to_lowercase();
    let domain_hit = list
        .domains
        .iter()
        .any(|d| host == *d || host.strip_suffix(d.as_str()).is_some_and(|rest| rest.ends_with('.')));
    if domain_hit {
        return false;
    }
    let last_segment = parsed.path().rsplit('/').next().unwrap_or("");
    if let Some(dot) = last_segment.rfind('.') {
        if list.extensions.contains(&last_segment[dot..].to_lowercase()) {
            return false;
        }
    }
    !(list.urls.contains(raw) || list.urls.contains(parsed.as_str()))
}

/// Numeric characters over all characters.
fn digit_fraction(view: &DocView<'_>, p: &Params) -> Outcome {
    let digits = view.text.chars().filter(|c| c.is_numeric()).count();
    let r = ratio(digits, view.num_chars as usize);
    (r < p.digit_fraction_max, Some(r))
}

/// Counts ellipses: each run of three or more dots once, and every U+2026.
pub(crate) fn count_ellipses(text: &str) -> usize {
    let mut count = 0;
    let mut dots = 0;
    for c in text.chars() {
        if c == '.' {
            dots += 1;
            continue;
        }
        if dots >= 3 {
            count += 1;
        }
        dots = 0;
        if c == '\u{2026}' {
            count += 1;
        }
    }
    if dots >= 3 {
        count += 1;
    }
    count
}

fn ellipsis_word_ratio(view: &DocView<'_>, p: &Params) -> Outcome {
    let r = ratio(count_ellipses(view.text), view.words.len().max(1));
    (r < p.ellipsis_word_ratio_max, Some(r))
}

/// Whole-word, case-insensitive matches. Reports the number of flagged occurrences.
fn flagged_words(view: &DocView<'_>, p: &Params, cfg: &FilterConfig) -> Outcome {
    let list = cfg.flagged_for(view.lang);
    let mut total = 0u64;
    let mut unique = HashSet::new();
    let mut weight = 0.0;
    for w in &view.words {
        let key = lookup_form(w);
        if let Some(&wt) = list.get(&key) {
            total += 1;
            weight += wt;
            unique.insert(key);
        }
    }
    let weight_limit = view.words.len() as f64 / p.flagged_words_per_weight;
    let passed = total < p.flagged_max_total && (unique.len() as u64) < p.flagged_max_unique && weight < weight_limit;
    (passed, Some(total as f64))
}

fn hashtag_word_ratio(view: &DocView<'_>, p: &Params) -> Outcome {
    let tags = view.words.iter().filter(|w| w.starts_with('#')).count();
    let r = ratio(tags, view.words.len());
    (r < p.hashtag_word_ratio_max, Some(r))
}

fn initial_bullet(view: &DocView<'_>, p: &Params, prefixes: &[String]) -> Outcome {
    let k = view
        .lines
        .iter()
        .filter(|l| {
            let l = l.trim_start();
            prefixes.iter().any(|b| l.starts_with(b.as_str()))
        })
        .count();
    let r = ratio(k, view.lines.len());
    (r < p.bullet_line_fraction_max || (k as u64) < p.bullet_min_lines, Some(r))
}

pub(crate) fn mean_med(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 };
    (mean + median) / 2.0
}

/// Reports MeanMed of characters per non-empty line.
fn mean_line_length(view: &DocView<'_>, p: &Params) -> Outcome {
    let mut chars: Vec<f64> = view.lines.iter().map(|l| l.chars().count() as f64).collect();
    let mut words: Vec<f64> = view.lines.iter().map(|l| l.split_whitespace().count() as f64).collect();
    let mm_chars = mean_med(&mut chars);
    let mm_words = mean_med(&mut words);
    (mm_chars > p.mean_line_min_chars && mm_words >= p.mean_line_min_words, Some(mm_chars))
}

fn mean_word_length(view: &DocView<'_>, p: &Params) -> Outcome {
    if view.words.is_empty() {
        return (false, Some(0.0));
    }
    let total: usize = view.words.iter().map(|w| w.chars().count()).sum();
    let mean = total as f64 / view.words.len() as f64;
    (mean >= p.mean_word_length_min && mean <= p.mean_word_length_max, Some(mean))
}

/// Reports the larger of the word and character repetition ratios.
fn repetitive_bsp(view: &DocView<'_>, p: &Params) -> Outcome {
    let r = bsp_ratios(&view.words, p.bsp_ngram);
    if r.ngrams < p.bsp_min_ngrams {
        return (true, Some(0.0));
    }
    let passed = r.word_ratio < p.bsp_word_ratio_max && r.char_ratio < p.bsp_char_ratio_max;
    (passed, Some(r.word_ratio.max(r.char_ratio)))
}

/// Reports the largest measurement-to-threshold ratio; the filter fails iff it is >= 1.
fn repetitive_gopher(view: &DocView<'_>, p: &Params) -> Outcome {
    let measures = GopherMeasures::compute(view.text, &view.words).values();
    let thresholds = p.gopher_thresholds();
    let passed = measures.iter().zip(&thresholds).all(|(m, t)| m < t);
    let worst = measures.iter().zip(&thresholds).map(|(m, t)| m / t).fold(0.0, f64::max);
    (passed, Some(worst))
}

/// Reports the stop-word fraction.
fn stop_word(view: &DocView<'_>, p: &Params, cfg: &FilterConfig) -> Outcome {
    let list = cfg.stopwords_for(view.lang);
    let hits = view.words.iter().filter(|w| list.contains(&lookup_form(w))).count();
    let r = ratio(hits, view.words.len());
    ((hits as u64) >= p.stop_word_min_count && r >= p.stop_word_min_fraction, Some(r))
}

fn trailing_ellipsis(view: &DocView<'_>, p: &Params) -> Outcome {
    let k = view
        .lines
        .iter()
        .filter(|l| {
            let l = l.trim_end();
            l.ends_with("...") || l.ends_with('\u{2026}')
        })
        .count();
    let r = ratio(k, view.lines.len());
    (r < p.trailing_ellipsis_fraction_max || (k as u64) < p.trailing_ellipsis_min_lines, Some(r))
}
