mod common;

use common::brute_has_induced_path;
use edskit::graph::fixtures::*;
use edskit::pattern::{false_twin_classes, induced_path_from, is_induced_path, is_pk_free, longest_induced_path};
use edskit::BipartiteGraph;
use proptest::prelude::*;

fn brute_longest(g: &BipartiteGraph) -> usize {
    (1..=g.n()).rev().find(|&k| brute_has_induced_path(g, k)).unwrap_or(0)
}

fn arb_bipartite(max_n: usize) -> impl Strategy<Value = BipartiteGraph> {
    (2..=max_n)
        .prop_flat_map(|n| (proptest::collection::vec(any::<bool>(), n), proptest::collection::vec(0u8..4, n * n)))
        .prop_map(|(side, bits)| {
            let n = side.len();
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|&(u, v)| side[u] != side[v] && bits[u * n + v] == 0)
                .collect();
            BipartiteGraph::from_edges(n, &edges).unwrap()
        })
}

/// A sparse skeleton with every vertex blown up into 1-3 false twins.
fn arb_twin_heavy() -> impl Strategy<Value = BipartiteGraph> {
    (arb_bipartite(6), proptest::collection::vec(1usize..=3, 6)).prop_map(|(base, mult)| {
        let mut owner = Vec::new();
        for (v, &m) in mult.iter().enumerate().take(base.n()) {
            owner.extend(std::iter::repeat_n(v, m));
        }
        let n = owner.len();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| base.has_edge(owner[a], owner[b]))
            .collect();
        BipartiteGraph::from_edges(n, &edges).unwrap()
    })
}

#[test]
fn path_from_examples() {
    let p = induced_path_from(&path(5), 0, 5, &[1, 2, 3, 4]).unwrap();
    assert_eq!(p.vertices(), &[0, 1, 2, 3, 4]);
    for v in 0..4 {
        let rest: Vec<usize> = (0..4).filter(|&w| w != v).collect();
        assert!(induced_path_from(&cycle(4), v, 4, &rest).is_none());
        assert!(!brute_has_induced_path(&cycle(4), 4));
    }
    assert!(induced_path_from(&star(3), 0, 3, &[1, 2, 3]).is_none());
}

#[test]
fn pk_free_examples() {
    assert!(!is_pk_free(&path(8), 8));
    assert_eq!(is_pk_free(&cycle(8), 8), !brute_has_induced_path(&cycle(8), 8));
    assert!(is_pk_free(&cycle(8), 8));
    assert_eq!(is_pk_free(&k33(), 8), !brute_has_induced_path(&k33(), 8));
    assert!(is_pk_free(&k33(), 8));
}

#[test]
fn longest_examples() {
    assert_eq!(longest_induced_path(&path(6), 10), 6);
    assert_eq!(longest_induced_path(&cycle(8), 10), brute_longest(&cycle(8)));
    assert_eq!(longest_induced_path(&cycle(8), 10), 7);
    assert_eq!(longest_induced_path(&k33(), 10), brute_longest(&k33()));
    assert_eq!(longest_induced_path(&k33(), 10), 3);
}

#[test]
fn twin_classes() {
    assert_eq!(false_twin_classes(&twin_leaf()), vec![0, 0, 2]);
    assert_eq!(false_twin_classes(&k33()), vec![0, 0, 0, 3, 3, 3]);
    assert_eq!(false_twin_classes(&path(4)), vec![0, 1, 2, 3]);
}

proptest! {
    #[test]
    fn pk_free_matches_brute_force(g in arb_bipartite(10), k in 2usize..=8) {
        prop_assert_eq!(is_pk_free(&g, k), !brute_has_induced_path(&g, k));
    }

    #[test]
    fn pk_free_matches_brute_force_with_twins(g in arb_twin_heavy(), k in 3usize..=8) {
        prop_assert_eq!(is_pk_free(&g, k), !brute_has_induced_path(&g, k));
    }

    #[test]
    fn longest_agrees_with_pk_free(g in arb_bipartite(12)) {
        let longest = longest_induced_path(&g, g.n());
        for k in 1..=g.n() {
            prop_assert_eq!(is_pk_free(&g, k), longest < k);
        }
    }

    #[test]
    fn longest_matches_brute_force(g in arb_twin_heavy()) {
        prop_assert_eq!(longest_induced_path(&g, g.n()), brute_longest(&g));
    }

    #[test]
    fn found_paths_are_induced(g in arb_bipartite(12), v in 0usize..12, k in 2usize..=7) {
        let v = v % g.n();
        let region: Vec<usize> = (0..g.n()).filter(|&w| w != v).collect();
        if let Some(p) = induced_path_from(&g, v, k, &region) {
            prop_assert_eq!(p.len(), k);
            prop_assert_eq!(p.vertices()[0], v);
            prop_assert!(is_induced_path(&g, p.vertices()));
        }
    }
}
