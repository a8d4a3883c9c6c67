//! Independent brute-force references shared by the integration tests.
#![allow(dead_code)]

use edskit::graph::Adjacency;
use edskit::BipartiteGraph;

/// Every vertex subset, checked directly against the definition. Only for
/// graphs with at most 20 vertices.
pub fn brute_force_eds<G: Adjacency>(g: &G) -> Vec<Vec<usize>> {
    let n = g.vertex_count();
    assert!(n <= 20, "brute force is exponential");
    let closed: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(1u32 << v, |m, &w| m | 1 << w))
        .collect();
    let mut out = Vec::new();
    for set in 0u32..(1 << n) {
        if closed.iter().all(|&c| (c & set).count_ones() == 1) {
            out.push((0..n).filter(|&v| set >> v & 1 == 1).collect());
        }
    }
    out
}

/// All induced paths on exactly `k` vertices, by checking every ordered
/// `k`-tuple grown along edges; no pruning beyond adjacency.
pub fn brute_has_induced_path(g: &BipartiteGraph, k: usize) -> bool {
    fn grow(g: &BipartiteGraph, seq: &mut Vec<usize>, k: usize) -> bool {
        if seq.len() == k {
            return (0..k).all(|i| (i + 1..k).all(|j| g.has_edge(seq[i], seq[j]) == (j == i + 1)));
        }
        let last = *seq.last().unwrap();
        for &w in g.neighbors(last) {
            if !seq.contains(&w) {
                seq.push(w);
                if grow(g, seq, k) {
                    return true;
                }
                seq.pop();
            }
        }
        false
    }
    if k == 0 {
        return false;
    }
    (0..g.n()).any(|v| grow(g, &mut vec![v], k))
}

/// BFS distance matrix.
pub fn all_distances(g: &BipartiteGraph) -> Vec<Vec<Option<usize>>> {
    (0..g.n()).map(|v| g.distances_from(v)).collect()
}
