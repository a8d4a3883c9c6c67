//! Induced (chordless) path search.
//!
//! All searches extend a path one vertex at a time and keep, for every
//! vertex, a count of how many closed neighborhoods of non-final path
//! vertices contain it. A vertex may extend the path iff it is adjacent to
//! the current end and that count is zero, which is exactly the
//! chordlessness condition.
//!
//! False twins (equal open neighborhoods) are interchangeable as the next
//! vertex of a path: once one twin's subtree has been explored, the others
//! are skipped at that step.

use fixedbitset::FixedBitSet;

use crate::graph::{BipartiteGraph, Vertex};

/// A chordless path, stored in traversal order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedPath(Vec<Vertex>);

impl InducedPath {
    pub fn vertices(&self) -> &[Vertex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Checks from scratch that `seq` is an induced path of `g`.
pub fn is_induced_path(g: &BipartiteGraph, seq: &[Vertex]) -> bool {
    let mut sorted = seq.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seq.len() || seq.iter().any(|&v| v >= g.n()) {
        return false;
    }
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if g.has_edge(seq[i], seq[j]) != (j == i + 1) {
                return false;
            }
        }
    }
    true
}

/// Reusable search state over one graph.
pub struct PathSearcher<'g> {
    g: &'g BipartiteGraph,
    blocked: Vec<u16>,
    path: Vec<Vertex>,
    twin_class: Vec<Vertex>,
    tried: Vec<u64>,
    stamp: u64,
}

/// Least vertex with the same open neighborhood, per vertex.
pub fn false_twin_classes(g: &BipartiteGraph) -> Vec<Vertex> {
    let mut first: std::collections::HashMap<&[Vertex], Vertex> = std::collections::HashMap::new();
    (0..g.n()).map(|v| *first.entry(g.neighbors(v)).or_insert(v)).collect()
}

impl<'g> PathSearcher<'g> {
    pub fn new(g: &'g BipartiteGraph) -> Self {
        PathSearcher {
            g,
            blocked: vec![0; g.n()],
            path: Vec::with_capacity(16),
            twin_class: false_twin_classes(g),
            tried: vec![0; g.n()],
            stamp: 0,
        }
    }

    fn block_closed(&mut self, v: Vertex, delta: i32) {
        let apply = |c: &mut u16| *c = (*c as i32 + delta) as u16;
        apply(&mut self.blocked[v]);
        for &w in self.g.neighbors(v) {
            apply(&mut self.blocked[w]);
        }
    }

    fn push(&mut self, w: Vertex) {
        if let Some(&last) = self.path.last() {
            self.block_closed(last, 1);
        }
        self.path.push(w);
    }

    fn pop(&mut self) {
        self.path.pop();
        if let Some(&last) = self.path.last() {
            self.block_closed(last, -1);
        }
    }

    fn extendable(&self, w: Vertex, region: Option<&FixedBitSet>) -> bool {
        self.blocked[w] == 0 && region.is_none_or(|r| r.contains(w)) && !self.path.contains(&w)
    }

    fn next_stamp(&mut self) -> u64 {
        self.stamp += 1;
        self.stamp
    }

    /// Marks `w`'s twin class as tried under `stamp`; false if it already was.
    fn first_of_class(&mut self, w: Vertex, stamp: u64) -> bool {
        let c = self.twin_class[w];
        if self.tried[c] == stamp {
            return false;
        }
        self.tried[c] = stamp;
        true
    }

    /// Lexicographically first induced path on `k` vertices starting at `v`
    /// whose other vertices lie in `region` (`None` = anywhere).
    pub fn first_from(&mut self, v: Vertex, k: usize, region: Option<&FixedBitSet>) -> Option<InducedPath> {
        if k == 0 {
            return None;
        }
        self.push(v);
        let found = self.first_rec(k, region);
        let result = found.then(|| InducedPath(self.path.clone()));
        while !self.path.is_empty() {
            self.pop();
        }
        result
    }

    fn first_rec(&mut self, k: usize, region: Option<&FixedBitSet>) -> bool {
        if self.path.len() == k {
            return true;
        }
        let last = *self.path.last().unwrap();
        let g = self.g;
        let stamp = self.next_stamp();
        for &w in g.neighbors(last) {
            if self.extendable(w, region) && self.first_of_class(w, stamp) {
                self.push(w);
                if self.first_rec(k, region) {
                    return true;
                }
                self.pop();
            }
        }
        false
    }

    /// Vertex count of the longest induced path starting at `v` with the
    /// remaining vertices in `region`, truncated at `cap`.
    pub fn longest_from(&mut self, v: Vertex, region: Option<&FixedBitSet>, cap: usize) -> usize {
        if cap == 0 {
            return 0;
        }
        self.push(v);
        let best = self.longest_rec(region, cap);
        self.pop();
        best
    }

    fn longest_rec(&mut self, region: Option<&FixedBitSet>, cap: usize) -> usize {
        let mut best = self.path.len();
        if best >= cap {
            return best;
        }
        let last = *self.path.last().unwrap();
        let g = self.g;
        let stamp = self.next_stamp();
        for &w in g.neighbors(last) {
            if self.extendable(w, region) && self.first_of_class(w, stamp) {
                self.push(w);
                best = best.max(self.longest_rec(region, cap));
                self.pop();
                if best >= cap {
                    break;
                }
            }
        }
        best
    }
}

pub fn region_mask(n: usize, region: &[Vertex]) -> FixedBitSet {
    let mut mask = FixedBitSet::with_capacity(n);
    for &v in region {
        mask.insert(v);
    }
    mask
}

/// An induced `P_k` with endpoint `v` and its other `k - 1` vertices in
/// `region`; the lexicographically smallest one when several exist.
pub fn induced_path_from(g: &BipartiteGraph, v: Vertex, k: usize, region: &[Vertex]) -> Option<InducedPath> {
    let mask = region_mask(g.n(), region);
    PathSearcher::new(g).first_from(v, k, Some(&mask))
}

/// Length (vertex count) of the longest induced path, capped at `cap`.
pub fn longest_induced_path(g: &BipartiteGraph, cap: usize) -> usize {
    let mut search = PathSearcher::new(g);
    let mut best = 0;
    for v in 0..g.n() {
        best = best.max(search.longest_from(v, None, cap));
        if best >= cap {
            break;
        }
    }
    best
}

/// No induced path on `k` vertices.
pub fn is_pk_free(g: &BipartiteGraph, k: usize) -> bool {
    longest_induced_path(g, k) < k
}
