use xxhash_rust::xxh32::xxh32;

/// Sorted, duplicate-free set of 32-bit shingle hashes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShingleSet {
    values: Vec<u32>,
}

impl ShingleSet {
    pub fn from_values(values: impl IntoIterator<Item = u32>) -> Self {
        let mut values: Vec<u32> = values.into_iter().collect();
        values.sort_unstable();
        values.dedup();
        ShingleSet { values }
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn intersection_size(&self, other: &ShingleSet) -> usize {
        let (a, b) = (&self.values, &other.values);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

fn hash_shingle(bytes: &[u8]) -> u32 {
    xxh32(bytes, 0)
}

/// Hashes every overlapping `n`-character window of the text. Texts shorter than `n`
/// characters (including the empty text) yield a single shingle of the whole text.
pub fn shingle(text: &str, n: usize) -> ShingleSet {
    let n = n.max(1);
    let mut bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
    bounds.push(text.len());
    let chars = bounds.len() - 1;
    if chars < n {
        return ShingleSet::from_values([hash_shingle(text.as_bytes())]);
    }
    ShingleSet::from_values((0..=chars - n).map(|start| hash_shingle(&text.as_bytes()[bounds[start]..bounds[start + n]])))
}

/// Number of windows before set deduplication.
pub fn window_count(text: &str, n: usize) -> usize {
    let chars = text.chars().count();
    if chars < n.max(1) { 1 } else { chars - n.max(1) + 1 }
}

/// `|a ∩ b| / |a ∪ b|`; two empty sets are identical (1.0).
pub fn jaccard(a: &ShingleSet, b: &ShingleSet) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection_size(b);
    inter as f64 / (a.len() + b.len() - inter) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn window_counts() {
        assert_eq!(shingle("abcdefghij", 10).len(), 1);
        assert_eq!(window_count("abcdefghijkl", 10), 3);
        assert_eq!(shingle("abcdefghijkl", 10).len(), 3);
        assert_eq!(shingle("short", 10).len(), 1);
        assert_eq!(shingle("", 10).len(), 1);
        assert_eq!(shingle("aaaaaaaaaaaaaaa", 10).len(), 1);
    }

    #[test]
    fn multibyte_windows_are_by_character() {
        assert_eq!(shingle("åäöåäöåäöåä", 10).len(), 2);
    }

    #[test]
    fn shingling_is_deterministic() {
        let text = "the same text always yields the same shingles";
        assert_eq!(shingle(text, 10), shingle(text, 10));
    }

    #[test]
    fn jaccard_examples() {
        let a = ShingleSet::from_values([1, 2, 3]);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &ShingleSet::from_values([7, 8])), 0.0);
        assert_eq!(jaccard(&a, &ShingleSet::from_values([2, 3, 4])), 0.5);
        assert_eq!(jaccard(&ShingleSet::default(), &ShingleSet::default()), 1.0);
    }

    proptest! {
        #[test]
        fn jaccard_matches_set_arithmetic(a in prop::collection::btree_set(0u32..64, 0..30),
                                          b in prop::collection::btree_set(0u32..64, 0..30)) {
            prop_assume!(!(a.is_empty() && b.is_empty()));
            let inter = a.intersection(&b).count() as f64;
            let union = a.union(&b).collect::<BTreeSet<_>>().len() as f64;
            let got = jaccard(&ShingleSet::from_values(a.iter().copied()), &ShingleSet::from_values(b.iter().copied()));
            prop_assert_eq!(got, inter / union);
        }
    }
}
