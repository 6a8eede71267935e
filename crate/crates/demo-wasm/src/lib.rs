//! Browser bindings: every export takes plain values and returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use curation::filters::DocView;
use curation::fuzzy::{jaccard, shares_band, shingle, LshParams};
use curation::metrics::compute_metrics;
use curation::normalize::normalize_text;
use curation::pipeline::baseline_identifier;
use curation::{Category, DocumentMetrics, FilterConfig, FilterVerdict};

thread_local! {
    static FILTERS: FilterConfig = FilterConfig::default();
}

#[derive(Serialize)]
struct FilterReport {
    normalized: String,
    metrics: DocumentMetrics,
    subset: String,
    removed: bool,
    verdicts: Vec<NamedVerdict>,
}

#[derive(Serialize)]
struct NamedVerdict {
    index: u8,
    #[serde(flatten)]
    verdict: FilterVerdict,
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("reports always serialize")
}

fn error_json(message: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": message.to_string() }).to_string()
}

/// Normalizes `text`, annotates it and runs the filters of the row `category` resolves to.
/// An empty `lang` lets the baseline identifier decide.
#[wasm_bindgen]
pub fn filter_report(text: &str, category: &str, lang: &str) -> String {
    let category: Category = match category.parse() {
        Ok(c) => c,
        Err(e) => return error_json(e),
    };
    FILTERS.with(|cfg| {
        let normalized = normalize_text(text);
        let mut metrics = compute_metrics(&baseline_identifier(cfg), &normalized);
        if !lang.trim().is_empty() {
            metrics.lang = lang.trim().to_string();
        }
        let subset = cfg.resolve_name("", category).to_string();
        let rule = cfg.subset(&subset).expect("resolved rows exist");
        let view = DocView::new(&normalized, None, &metrics.lang);
        let verdicts: Vec<NamedVerdict> = rule
            .filters
            .iter()
            .map(|&id| NamedVerdict { index: id.index(), verdict: curation::filters::run_filter(id, &view, &rule.params, cfg) })
            .collect();
        let removed = verdicts.iter().any(|v| !v.verdict.passed);
        to_json(&FilterReport { normalized: normalized.clone(), metrics, subset, removed, verdicts })
    })
}

#[derive(Serialize)]
struct Similarity {
    shingles_a: usize,
    shingles_b: usize,
    jaccard: f64,
    minhash_agreement: f64,
    candidate: bool,
    duplicate: bool,
    candidate_probability: f64,
}

/// Exact and estimated similarity of two texts under the deduplication parameters.
#[wasm_bindgen]
pub fn compare_texts(a: &str, b: &str, seed: u32, shingle_n: u32, bands: u32, hashes: u32) -> String {
    let params = LshParams {
        shingle_n: shingle_n as usize,
        num_hashes: hashes as usize,
        bands: bands as usize,
        jaccard_threshold: 0.5,
        master_seed: u64::from(seed),
    };
    if let Err(e) = params.validate() {
        return error_json(e);
    }
    let (na, nb) = (normalize_text(a), normalize_text(b));
    let (sa, sb) = (shingle(&na, params.shingle_n), shingle(&nb, params.shingle_n));
    let family = params.hash_family();
    let (fa, fb) = (family.signature(&sa).expect("non-empty"), family.signature(&sb).expect("non-empty"));
    let same = fa.iter().zip(&fb).filter(|(x, y)| x == y).count();
    let j = jaccard(&sa, &sb);
    let candidate = shares_band(&fa, &fb, params.bands, params.rows());
    to_json(&Similarity {
        shingles_a: sa.len(),
        shingles_b: sb.len(),
        jaccard: j,
        minhash_agreement: same as f64 / fa.len() as f64,
        candidate,
        duplicate: candidate && j >= params.jaccard_threshold,
        candidate_probability: params.candidate_probability(j),
    })
}

/// Points `(s, 1 - (1 - s^r)^b)` of the banding curve, `steps + 1` of them.
#[wasm_bindgen]
pub fn banding_curve(bands: u32, rows: u32, steps: u32) -> String {
    let params = LshParams { bands: bands as usize, num_hashes: (bands * rows) as usize, ..LshParams::default() };
    if let Err(e) = params.validate() {
        return error_json(e);
    }
    let steps = steps.max(1);
    let points: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let s = f64::from(i) / f64::from(steps);
            (s, params.candidate_probability(s))
        })
        .collect();
    to_json(&points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_report_lists_row_filters() {
        let v: serde_json::Value = serde_json::from_str(&filter_report("kort", "Code", "")).unwrap();
        assert_eq!(v["subset"], "code");
        let ids: Vec<u64> = v["verdicts"].as_array().unwrap().iter().map(|x| x["index"].as_u64().unwrap()).collect();
        assert_eq!(ids, [3, 4]);
        assert_eq!(v["removed"], true);
    }

    #[test]
    fn unknown_category_is_an_error() {
        let v: serde_json::Value = serde_json::from_str(&filter_report("x", "Poetry", "")).unwrap();
        assert!(v["error"].is_string());
    }

    #[test]
    fn identical_texts_are_duplicates() {
        let text = "det var en gång en katt som bodde i ett hus vid havet";
        let v: serde_json::Value = serde_json::from_str(&compare_texts(text, text, 1, 10, 2, 10)).unwrap();
        assert_eq!(v["jaccard"], 1.0);
        assert_eq!(v["duplicate"], true);
    }

    #[test]
    fn curve_endpoints() {
        let v: Vec<(f64, f64)> = serde_json::from_str(&banding_curve(2, 5, 10)).unwrap();
        assert_eq!(v.first().unwrap().1, 0.0);
        assert_eq!(v.last().unwrap().1, 1.0);
        assert!((v[5].1 - 0.0615).abs() < 1e-4);
    }
}
