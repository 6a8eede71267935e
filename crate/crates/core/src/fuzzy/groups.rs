use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

/// Disjoint sets over dense indices, with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Adds a new singleton and returns its index.
    pub fn push(&mut self) -> usize {
        let i = self.parent.len();
        self.parent.push(i);
        self.size.push(1);
        i
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Components with at least two members, each sorted, in order of smallest member.
    pub fn components(&mut self) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.len() {
            let r = self.find(i);
            by_root.entry(r).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = by_root.into_values().filter(|c| c.len() >= 2).collect();
        out.sort_by_key(|c| c[0]);
        out
    }
}

/// Union-find keyed by document id.
#[derive(Debug, Default)]
pub struct IdUnionFind {
    index: HashMap<String, usize>,
    ids: Vec<String>,
    sets: UnionFind,
}

impl Default for UnionFind {
    fn default() -> Self {
        UnionFind::new(0)
    }
}

impl IdUnionFind {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.sets.push();
        self.index.insert(id.to_string(), i);
        self.ids.push(id.to_string());
        i
    }

    pub fn union(&mut self, a: &str, b: &str) -> bool {
        let (ia, ib) = (self.intern(a), self.intern(b));
        self.sets.union(ia, ib)
    }

    pub fn groups(&mut self) -> Vec<DuplicateGroup> {
        let mut groups: Vec<DuplicateGroup> = self
            .sets
            .components()
            .into_iter()
            .map(|c| DuplicateGroup::new(c.into_iter().map(|i| self.ids[i].clone())))
            .collect();
        groups.sort_by(|a, b| a.survivor_id.cmp(&b.survivor_id));
        groups
    }
}

/// A connected component of near-duplicate documents. Exactly one member survives: the
/// lexicographically smallest id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub survivor_id: String,
    pub member_ids: BTreeSet<String>,
}

impl DuplicateGroup {
    pub fn new(members: impl IntoIterator<Item = String>) -> Self {
        let member_ids: BTreeSet<String> = members.into_iter().collect();
        let survivor_id = member_ids.first().cloned().unwrap_or_default();
        DuplicateGroup { survivor_id, member_ids }
    }

    pub fn size(&self) -> usize {
        self.member_ids.len()
    }

    pub fn removed_ids(&self) -> impl Iterator<Item = &String> {
        self.member_ids.iter().filter(move |id| **id != self.survivor_id)
    }
}

/// Connected components of an undirected edge list. Singletons produce no group.
pub fn build_groups<'a, I>(edges: I) -> Vec<DuplicateGroup>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut uf = IdUnionFind::new();
    for (a, b) in edges {
        uf.union(a, b);
    }
    uf.groups()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitive_edges_form_one_group() {
        let groups = build_groups([("b", "a"), ("b", "c")]);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].survivor_id, "a");
        assert_eq!(groups[0].size(), 3);
        assert_eq!(groups[0].removed_ids().collect::<Vec<_>>(), ["b", "c"]);
    }

    #[test]
    fn no_edges_no_groups() {
        assert!(build_groups(std::iter::empty()).is_empty());
    }

    #[test]
    fn disjoint_pairs_form_two_groups() {
        let groups = build_groups([("x", "y"), ("a", "b")]);
        let survivors: Vec<_> = groups.iter().map(|g| g.survivor_id.as_str()).collect();
        assert_eq!(survivors, ["a", "x"]);
    }

    #[test]
    fn self_loops_are_not_groups() {
        assert!(build_groups([("a", "a")]).is_empty());
    }

    #[test]
    fn union_find_reports_new_links() {
        let mut uf = UnionFind::new(4);
        assert!(uf.union(0, 1));
        assert!(uf.union(2, 3));
        assert!(!uf.union(1, 0));
        assert!(uf.union(1, 3));
        assert!(uf.connected(0, 2));
        assert_eq!(uf.components(), vec![vec![0, 1, 2, 3]]);
    }
}
