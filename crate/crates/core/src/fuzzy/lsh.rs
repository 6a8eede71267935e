use std::collections::{BTreeSet, HashMap};

use super::minhash::MinHashFingerprint;
use super::shingle::{jaccard, ShingleSet};
use super::LshParams;

/// An unordered id pair, stored smaller id first.
pub type IdPair = (String, String);

fn ordered(a: &str, b: &str) -> IdPair {
    if a <= b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) }
}

/// One map per band from the band's slice of the signature to the documents sharing it.
pub struct BandIndex<'a> {
    bins: Vec<HashMap<&'a [u64], Vec<usize>>>,
}

impl<'a> BandIndex<'a> {
    /// Indexes signatures; position `i` of `signatures` is document `i`.
    pub fn build(signatures: impl IntoIterator<Item = &'a [u64]>, bands: usize, rows: usize) -> Self {
        let mut bins: Vec<HashMap<&'a [u64], Vec<usize>>> = (0..bands).map(|_| HashMap::new()).collect();
        for (doc, sig) in signatures.into_iter().enumerate() {
            for (band, bin) in bins.iter_mut().enumerate() {
                bin.entry(&sig[band * rows..(band + 1) * rows]).or_default().push(doc);
            }
        }
        BandIndex { bins }
    }

    /// Buckets holding two or more documents, across all bins.
    pub fn shared_buckets(&self) -> impl Iterator<Item = &[usize]> {
        self.bins.iter().flat_map(|bin| bin.values()).filter(|b| b.len() >= 2).map(Vec::as_slice)
    }

    /// All distinct candidate index pairs `(i, j)` with `i < j`, sorted.
    pub fn candidate_pairs(&self) -> BTreeSet<(usize, usize)> {
        let mut pairs = BTreeSet::new();
        for bucket in self.shared_buckets() {
            for (k, &i) in bucket.iter().enumerate() {
                for &j in &bucket[k + 1..] {
                    pairs.insert((i.min(j), i.max(j)));
                }
            }
        }
        pairs
    }
}

/// True iff some band of the two signatures is identical.
pub fn shares_band(a: &[u64], b: &[u64], bands: usize, rows: usize) -> bool {
    (0..bands).any(|k| a[k * rows..(k + 1) * rows] == b[k * rows..(k + 1) * rows])
}

/// Pairs of documents that collide in at least one band bin.
pub fn lsh_candidates(fingerprints: &[MinHashFingerprint], params: &LshParams) -> BTreeSet<IdPair> {
    let index = BandIndex::build(fingerprints.iter().map(|f| f.values.as_slice()), params.bands, params.rows());
    index
        .candidate_pairs()
        .into_iter()
        .filter(|(i, j)| fingerprints[*i].doc_id != fingerprints[*j].doc_id)
        .map(|(i, j)| ordered(&fingerprints[i].doc_id, &fingerprints[j].doc_id))
        .collect()
}

/// Keeps the candidate pairs whose exact shingle-set Jaccard similarity is at least
/// `threshold`. Pairs with an id missing from `shingles` are dropped.
pub fn verify_candidates(
    pairs: &BTreeSet<IdPair>,
    shingles: &HashMap<String, ShingleSet>,
    threshold: f64,
) -> BTreeSet<IdPair> {
    pairs
        .iter()
        .filter(|(a, b)| match (shingles.get(a), shingles.get(b)) {
            (Some(sa), Some(sb)) => jaccard(sa, sb) >= threshold,
            _ => {
                log::warn!("candidate pair ({a}, {b}) has no shingle set");
                false
            }
        })
        .cloned()
        .collect()
}
