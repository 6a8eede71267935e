//! Stage 4: removal of byte-identical documents by MD5, first occurrence wins.

use std::collections::HashSet;

use crate::document::{Document, RemovalStage};
use crate::metrics::md5_hex;

fn md5_of(doc: &Document) -> String {
    match &doc.metrics {
        Some(m) => m.md5.clone(),
        None => {
            log::warn!("document {} has no md5; hashing its text", doc.id);
            md5_hex(&doc.text)
        }
    }
}

/// Streaming exact deduplicator holding the set of hashes seen so far.
#[derive(Debug, Default)]
pub struct ExactDeduper {
    seen: HashSet<String>,
    removed: u64,
}

impl ExactDeduper {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true when the document is kept. Later copies are marked `dedup_exact`.
    pub fn observe(&mut self, doc: &mut Document) -> bool {
        if self.seen.insert(md5_of(doc)) {
            true
        } else {
            doc.removed_stage = Some(RemovalStage::DedupExact);
            self.removed += 1;
            false
        }
    }

    pub fn removed(&self) -> u64 {
        self.removed
    }
}

/// Outcome of exact deduplication over an ordered stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDedupResult {
    pub kept: Vec<Document>,
    /// Removed documents, marked `dedup_exact`, in input order.
    pub removed: Vec<Document>,
}

impl ExactDedupResult {
    pub fn removed_count(&self) -> usize {
        self.removed.len()
    }
}

pub fn exact_dedup(docs: impl IntoIterator<Item = Document>) -> ExactDedupResult {
    let mut deduper = ExactDeduper::new();
    let (mut kept, mut removed) = (Vec::new(), Vec::new());
    for mut doc in docs {
        if deduper.observe(&mut doc) {
            kept.push(doc);
        } else {
            removed.push(doc);
        }
    }
    ExactDedupResult { kept, removed }
}

/// Same result as [`exact_dedup`], computed over `partitions` hash-prefix partitions in
/// parallel. Within a partition the lowest ingest ordinal of each hash wins.
pub fn exact_dedup_partitioned(docs: Vec<Document>, partitions: usize) -> ExactDedupResult {
    let partitions = partitions.clamp(1, 256);
    let hashes: Vec<String> = docs.iter().map(md5_of).collect();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); partitions];
    for (ordinal, h) in hashes.iter().enumerate() {
        let prefix = u8::from_str_radix(h.get(..2).unwrap_or("00"), 16).unwrap_or(0);
        buckets[usize::from(prefix) % partitions].push(ordinal);
    }

    // buckets hold ordinals in ingest order, so the first insert of a hash is its earliest copy
    let first_in_bucket = |bucket: &Vec<usize>| -> Vec<usize> {
        let mut seen: HashSet<&str> = HashSet::new();
        bucket.iter().copied().filter(|&ordinal| !seen.insert(hashes[ordinal].as_str())).collect()
    };

    #[cfg(feature = "parallel")]
    let dup_lists: Vec<Vec<usize>> = {
        use rayon::prelude::*;
        buckets.par_iter().map(first_in_bucket).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let dup_lists: Vec<Vec<usize>> = buckets.iter().map(first_in_bucket).collect();

    let mut is_dup = vec![false; docs.len()];
    for i in dup_lists.into_iter().flatten() {
        is_dup[i] = true;
    }
    let (mut kept, mut removed) = (Vec::new(), Vec::new());
    for (mut doc, dup) in docs.into_iter().zip(is_dup) {
        if dup {
            doc.removed_stage = Some(RemovalStage::DedupExact);
            removed.push(doc);
        } else {
            kept.push(doc);
        }
    }
    ExactDedupResult { kept, removed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Category;
    use proptest::prelude::*;

    fn doc(id: &str, text: &str) -> Document {
        Document::new(id, text, "s", Category::WebCc)
    }

    fn ids(docs: &[Document]) -> Vec<&str> {
        docs.iter().map(|d| d.id.as_str()).collect()
    }

    #[test]
    fn later_copy_is_removed() {
        let out = exact_dedup(vec![doc("a", "same"), doc("a2", "same"), doc("b", "other")]);
        assert_eq!(ids(&out.kept), ["a", "b"]);
        assert_eq!(out.removed_count(), 1);
        assert_eq!(out.removed[0].removed_stage, Some(RemovalStage::DedupExact));
    }

    #[test]
    fn distinct_stream_is_untouched() {
        let docs: Vec<_> = (0..20).map(|i| doc(&i.to_string(), &format!("text {i}"))).collect();
        let out = exact_dedup(docs.clone());
        assert_eq!(out.kept, docs);
        assert!(out.removed.is_empty());
    }

    proptest! {
        #[test]
        fn partitioned_matches_sequential(texts in prop::collection::vec(0u8..12, 0..80), parts in 1usize..9) {
            let docs: Vec<_> = texts.iter().enumerate().map(|(i, t)| doc(&i.to_string(), &format!("t{t}"))).collect();
            let seq = exact_dedup(docs.clone());
            let par = exact_dedup_partitioned(docs.clone(), parts);
            prop_assert_eq!(&seq, &par);
            prop_assert_eq!(seq.kept.len() + seq.removed.len(), docs.len());
            let again = exact_dedup(seq.kept.clone());
            prop_assert_eq!(again.kept, seq.kept);
        }
    }
}
