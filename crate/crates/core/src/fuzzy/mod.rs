//! Stages 5 and 6: language segmentation and MinHash-LSH near-duplicate removal.
//!
//! Documents are shingled into hashed character n-grams, fingerprinted with `p`
//! min-hashes, and bucketed by `b` bands of `r = p / b` rows. Documents sharing a bucket
//! are candidates; a candidate pair becomes a duplicate edge when the exact Jaccard
//! similarity of the shingle sets reaches the threshold. Connected components of the edge
//! graph are duplicate groups, and each keeps only its smallest id.

mod groups;
mod lsh;
mod minhash;
mod shards;
mod shingle;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::document::{Category, Document, RemovalStage};

pub use groups::{build_groups, DuplicateGroup, IdUnionFind, UnionFind};
pub use lsh::{lsh_candidates, shares_band, verify_candidates, BandIndex, IdPair};
pub use minhash::{HashFamily, MinHashError, MinHashFingerprint, MODULUS};
pub use shards::{plan_shards, DedupMode, PlanError, Shard, ShardCaps, ShardInput, ShardPlan};
pub use shingle::{jaccard, shingle, window_count, ShingleSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LshParams {
    pub shingle_n: usize,
    pub num_hashes: usize,
    pub bands: usize,
    pub jaccard_threshold: f64,
    pub master_seed: u64,
}

impl Default for LshParams {
    fn default() -> Self {
        LshParams { shingle_n: 10, num_hashes: 10, bands: 2, jaccard_threshold: 0.5, master_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LshParamsError {
    #[error("{num_hashes} hash functions cannot be split into {bands} equal bands")]
    Bands { num_hashes: usize, bands: usize },
    #[error("Jaccard threshold {0} must be in (0, 1]")]
    Threshold(f64),
    #[error("shingle width must be at least 1")]
    ShingleWidth,
}

impl LshParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn rows(&self) -> usize {
        self.num_hashes / self.bands.max(1)
    }

    pub fn validate(&self) -> Result<(), LshParamsError> {
        if self.bands == 0 || self.num_hashes == 0 || !self.num_hashes.is_multiple_of(self.bands) {
            return Err(LshParamsError::Bands { num_hashes: self.num_hashes, bands: self.bands });
        }
        if !(self.jaccard_threshold > 0.0 && self.jaccard_threshold <= 1.0) {
            return Err(LshParamsError::Threshold(self.jaccard_threshold));
        }
        if self.shingle_n == 0 {
            return Err(LshParamsError::ShingleWidth);
        }
        Ok(())
    }

    /// Probability that a pair with Jaccard similarity `s` shares at least one band:
    /// `1 - (1 - s^r)^b`.
    pub fn candidate_probability(&self, s: f64) -> f64 {
        1.0 - (1.0 - s.powi(self.rows() as i32)).powi(self.bands as i32)
    }

    pub fn hash_family(&self) -> HashFamily {
        HashFamily::new(self.master_seed, self.num_hashes)
    }
}

/// Fingerprints a shingle set under the hash family drawn from `params.master_seed`.
pub fn minhash(set: &ShingleSet, doc_id: &str, params: &LshParams) -> Result<MinHashFingerprint, MinHashError> {
    Ok(MinHashFingerprint { doc_id: doc_id.to_string(), values: params.hash_family().signature(set)? })
}

/// Subset key used for segmentation: `code` for the Code category, else the language.
pub fn segment_key(doc: &Document) -> String {
    if doc.category == Category::Code {
        return "code".to_string();
    }
    doc.lang().unwrap_or(crate::langid::UNDETERMINED).to_string()
}

/// Splits documents into per-language subsets, preserving order within each subset.
pub fn segment_by_language(docs: impl IntoIterator<Item = Document>) -> BTreeMap<String, Vec<Document>> {
    let mut out: BTreeMap<String, Vec<Document>> = BTreeMap::new();
    for doc in docs {
        out.entry(segment_key(&doc)).or_default().push(doc);
    }
    out
}

#[cfg(feature = "parallel")]
fn map_all<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_all<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Verified duplicate edges among `docs`, as index pairs.
///
/// Candidates already connected through earlier edges are not re-verified; the
/// connected components are the same as with every candidate verified.
fn duplicate_edges(docs: &[&Document], params: &LshParams, family: &HashFamily) -> Vec<(usize, usize)> {
    let shingles: Vec<ShingleSet> = map_all(docs, |d| shingle(&d.text, params.shingle_n));
    let signatures: Vec<Vec<u64>> =
        map_all(&shingles, |s| family.signature(s).expect("shingle sets are never empty"));
    let index = BandIndex::build(signatures.iter().map(Vec::as_slice), params.bands, params.rows());

    let mut sets = UnionFind::new(docs.len());
    let mut edges = Vec::new();
    for bucket in index.shared_buckets() {
        for (k, &i) in bucket.iter().enumerate() {
            for &j in &bucket[k + 1..] {
                if sets.connected(i, j) {
                    continue;
                }
                if jaccard(&shingles[i], &shingles[j]) >= params.jaccard_threshold {
                    sets.union(i, j);
                    edges.push((i.min(j), i.max(j)));
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Verified duplicate edges, by document id.
pub fn find_duplicate_edges(docs: &[&Document], params: &LshParams) -> Vec<IdPair> {
    duplicate_edges(docs, params, &params.hash_family())
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = (&docs[i].id, &docs[j].id);
            if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyOutcome {
    pub kept: Vec<Document>,
    /// Non-survivors, marked `dedup_fuzzy`, in input order.
    pub removed: Vec<Document>,
    pub groups: Vec<DuplicateGroup>,
}

fn split_by_groups(docs: Vec<Document>, groups: &[DuplicateGroup]) -> (Vec<Document>, Vec<Document>) {
    let doomed: HashSet<&str> = groups.iter().flat_map(|g| g.removed_ids()).map(String::as_str).collect();
    let (mut kept, mut removed) = (Vec::new(), Vec::new());
    for mut doc in docs {
        if doomed.contains(doc.id.as_str()) {
            doc.removed_stage = Some(RemovalStage::DedupFuzzy);
            removed.push(doc);
        } else {
            kept.push(doc);
        }
    }
    (kept, removed)
}

/// Deduplicates one single-language shard in isolation.
pub fn fuzzy_dedup_shard(docs: Vec<Document>, params: &LshParams) -> FuzzyOutcome {
    let refs: Vec<&Document> = docs.iter().collect();
    let edges = find_duplicate_edges(&refs, params);
    let groups = build_groups(edges.iter().map(|(a, b)| (a.as_str(), b.as_str())));
    let (kept, removed) = split_by_groups(docs, &groups);
    FuzzyOutcome { kept, removed, groups }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterShardOutcome {
    /// Surviving documents, per input shard.
    pub kept: Vec<Vec<Document>>,
    pub removed: Vec<Document>,
    /// Groups after merging all groups that share a document.
    pub groups: Vec<DuplicateGroup>,
    pub pair_jobs: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterShardError {
    #[error("inter-shard deduplication needs at least two shards, got {0}")]
    TooFewShards(usize),
}

/// Deduplicates every pair of shards as one concatenated job, then merges the groups of
/// all jobs by connected components over document ids.
pub fn inter_shard_dedup(shards: Vec<Vec<Document>>, params: &LshParams) -> Result<InterShardOutcome, InterShardError> {
    let n = shards.len();
    if n < 2 {
        return Err(InterShardError::TooFewShards(n));
    }
    let jobs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let family = params.hash_family();
    let job_edges: Vec<Vec<IdPair>> = map_all(&jobs, |&(i, j)| {
        let docs: Vec<&Document> = shards[i].iter().chain(&shards[j]).collect();
        duplicate_edges(&docs, params, &family)
            .into_iter()
            .map(|(a, b)| (docs[a].id.clone(), docs[b].id.clone()))
            .collect()
    });

    let mut merged = IdUnionFind::new();
    for (a, b) in job_edges.iter().flatten() {
        merged.union(a, b);
    }
    let groups = merged.groups();

    let mut kept = Vec::with_capacity(n);
    let mut removed = Vec::new();
    for shard in shards {
        let (k, r) = split_by_groups(shard, &groups);
        kept.push(k);
        removed.extend(r);
    }
    Ok(InterShardOutcome { kept, removed, groups, pair_jobs: jobs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::DocumentMetrics;

    fn doc(id: &str, text: &str) -> Document {
        Document::new(id, text, "s", Category::WebCc)
    }

    fn with_lang(id: &str, lang: &str, category: Category) -> Document {
        let mut d = Document::new(id, "text", "s", category);
        d.metrics = Some(DocumentMetrics {
            lang: lang.into(),
            num_chars: 4,
            num_utf8bytes: 4,
            num_words: 1,
            num_sents: 1,
            md5: crate::metrics::md5_hex("text"),
        });
        d
    }

    fn prose(seed: usize, words: usize) -> String {
        (0..words).map(|i| format!("w{}x{}", seed, i * 7919 % 10007)).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn params_validation() {
        assert!(LshParams::default().validate().is_ok());
        assert_eq!(LshParams::default().rows(), 5);
        let bad = LshParams { bands: 3, ..LshParams::default() };
        assert!(matches!(bad.validate(), Err(LshParamsError::Bands { .. })));
        let bad = LshParams { jaccard_threshold: 0.0, ..LshParams::default() };
        assert!(matches!(bad.validate(), Err(LshParamsError::Threshold(_))));
    }

    #[test]
    fn banding_curve_closed_form() {
        let p = LshParams::default();
        assert!((p.candidate_probability(0.5) - 0.0615).abs() < 5e-5);
        assert!((p.candidate_probability(0.9) - 0.8323).abs() < 5e-5);
        assert_eq!(p.candidate_probability(1.0), 1.0);
    }

    #[test]
    fn segmentation_partitions_by_language() {
        let docs = vec![
            with_lang("1", "sv", Category::WebCc),
            with_lang("2", "en", Category::Books),
            with_lang("3", "sv", Category::Books),
            with_lang("4", "en", Category::Code),
        ];
        let seg = segment_by_language(docs);
        let sizes: Vec<(&str, usize)> = seg.iter().map(|(k, v)| (k.as_str(), v.len())).collect();
        assert_eq!(sizes, [("code", 1), ("en", 1), ("sv", 2)]);
    }

    #[test]
    fn identical_documents_form_one_group() {
        let text = prose(1, 80);
        let out = fuzzy_dedup_shard(vec![doc("b", &text), doc("a", &text), doc("c", &prose(2, 80))], &LshParams::default());
        assert_eq!(out.groups.len(), 1);
        assert_eq!(out.groups[0].survivor_id, "a");
        assert_eq!(out.kept.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(out.removed[0].removed_stage, Some(RemovalStage::DedupFuzzy));
    }

    #[test]
    fn distinct_documents_are_all_kept() {
        let docs: Vec<_> = (0..50).map(|i| doc(&format!("d{i}"), &prose(i, 60))).collect();
        let out = fuzzy_dedup_shard(docs, &LshParams::default().with_seed(9));
        assert!(out.groups.is_empty());
        assert_eq!(out.kept.len(), 50);
    }

    #[test]
    fn inter_shard_needs_two_shards() {
        assert_eq!(
            inter_shard_dedup(vec![vec![]], &LshParams::default()),
            Err(InterShardError::TooFewShards(1))
        );
    }

    #[test]
    fn cross_shard_duplicates_are_caught() {
        let dup = prose(7, 100);
        let shards = vec![
            vec![doc("s0-a", &dup), doc("s0-b", &prose(8, 50))],
            vec![doc("s1-a", &prose(9, 50))],
            vec![doc("s2-a", &dup)],
            vec![doc("s3-a", &prose(10, 50))],
        ];
        let out = inter_shard_dedup(shards, &LshParams::default()).unwrap();
        assert_eq!(out.pair_jobs, 6);
        assert_eq!(out.groups.len(), 1);
        assert_eq!(out.removed.len(), 1);
        assert_eq!(out.removed[0].id, "s2-a");
        assert!(out.kept[2].is_empty());
    }
}
