//! Immutable bipartite graphs, breadth-first distance levels and the small
//! set predicates (join, co-join, distance) the solver is phrased in.
//!
//! Vertices are dense integers `0..n`. The two-coloring is always computed
//! here and never read from the input: every component is colored by BFS
//! starting from its lowest vertex, which gets [`Color::Black`].

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vertex = usize;

/// Side of the bipartition. Black is the `X` side, white the `Y` side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn opposite(self) -> Color {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex {vertex} is out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("duplicate edge {0} {1}")]
    DuplicateEdge(Vertex, Vertex),
    #[error("graph is not bipartite, odd cycle {cycle:?}")]
    NotBipartite { cycle: Vec<Vertex> },
    #[error("distance levels need a nonempty basis")]
    EmptyBasis,
}

/// Read-only adjacency access. The exact-cover oracle is written against
/// this so it also runs on graphs that are not bipartite.
pub trait Adjacency {
    fn vertex_count(&self) -> usize;
    fn neighbors(&self, v: Vertex) -> &[Vertex];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    adjacency: Vec<Vec<Vertex>>,
    color: Vec<Color>,
    edge_count: usize,
}

impl BipartiteGraph {
    /// Builds the graph and its normalized two-coloring.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self, GraphError> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(pair) = list.windows(2).find(|p| p[0] == p[1]) {
                return Err(GraphError::DuplicateEdge(u.min(pair[0]), u.max(pair[0])));
            }
        }
        let color = two_color(&adjacency)?;
        Ok(BipartiteGraph {
            adjacency,
            color,
            edge_count: edges.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v].len()
    }

    pub fn color(&self, v: Vertex) -> Color {
        self.color[v]
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn vertices_of_color(&self, c: Color) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.n()).filter(move |&v| self.color[v] == c)
    }

    /// One bitset row per vertex, for O(1) adjacency tests in hot loops.
    pub fn adjacency_bits(&self) -> Vec<FixedBitSet> {
        self.adjacency
            .iter()
            .map(|list| {
                let mut row = FixedBitSet::with_capacity(self.n());
                for &w in list {
                    row.insert(w);
                }
                row
            })
            .collect()
    }

    /// Maximal connected vertex sets, each sorted, ordered by minimum vertex.
    pub fn components(&self) -> Vec<Vec<Vertex>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut blocks = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut block = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in &self.adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        block.push(w);
                        queue.push_back(w);
                    }
                }
            }
            block.sort_unstable();
            blocks.push(block);
        }
        blocks
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.components().len() == 1
    }

    /// BFS distances from `source`; `None` for vertices in other components.
    pub fn distances_from(&self, source: Vertex) -> Vec<Option<usize>> {
        multi_source_bfs(&self.adjacency, &[source])
    }

    pub fn distance(&self, u: Vertex, v: Vertex) -> Option<usize> {
        if u == v {
            return Some(0);
        }
        self.distances_from(u)[v]
    }

    /// Partition into distance levels from `basis`.
    pub fn bfs_levels(&self, basis: &[Vertex]) -> Result<DistanceLevels, GraphError> {
        if basis.is_empty() {
            return Err(GraphError::EmptyBasis);
        }
        if let Some(&v) = basis.iter().find(|&&v| v >= self.n()) {
            return Err(GraphError::VertexOutOfRange { vertex: v, n: self.n() });
        }
        let level_of = multi_source_bfs(&self.adjacency, basis);
        let depth = level_of.iter().flatten().max().map_or(0, |&d| d + 1);
        let mut levels = vec![Vec::new(); depth];
        for (v, lvl) in level_of.iter().enumerate() {
            if let Some(i) = lvl {
                levels[*i].push(v);
            }
        }
        let mut basis = basis.to_vec();
        basis.sort_unstable();
        basis.dedup();
        Ok(DistanceLevels {
            basis,
            level_of,
            levels,
        })
    }

    /// `v` is adjacent to every vertex of `set` (vacuously true when empty).
    pub fn is_join(&self, v: Vertex, set: &[Vertex]) -> bool {
        set.iter().all(|&u| self.has_edge(v, u))
    }

    /// `v` is adjacent to no vertex of `set`.
    pub fn is_cojoin(&self, v: Vertex, set: &[Vertex]) -> bool {
        set.iter().all(|&u| !self.has_edge(v, u))
    }

    /// The subgraph induced by `vertices`, relabeled to `0..k` in ascending
    /// order of the original ids. Returns the graph and the map back.
    pub fn induced_subgraph(&self, vertices: &[Vertex]) -> (BipartiteGraph, Vec<Vertex>) {
        let mut original = vertices.to_vec();
        original.sort_unstable();
        original.dedup();
        let mut local = vec![usize::MAX; self.n()];
        for (i, &v) in original.iter().enumerate() {
            local[v] = i;
        }
        let edges: Vec<_> = original
            .iter()
            .flat_map(|&u| {
                let local = &local;
                self.adjacency[u]
                    .iter()
                    .filter(move |&&w| u < w && local[w] != usize::MAX)
                    .map(move |&w| (local[u], local[w]))
            })
            .collect();
        let sub = BipartiteGraph::from_edges(original.len(), &edges)
            .expect("induced subgraph of a bipartite graph is bipartite");
        (sub, original)
    }
}

impl Adjacency for BipartiteGraph {
    fn vertex_count(&self) -> usize {
        self.n()
    }

    fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }
}

fn multi_source_bfs(adjacency: &[Vec<Vertex>], sources: &[Vertex]) -> Vec<Option<usize>> {
    let mut dist = vec![None; adjacency.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &w in &adjacency[u] {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

fn two_color(adjacency: &[Vec<Vertex>]) -> Result<Vec<Color>, GraphError> {
    let n = adjacency.len();
    let mut color: Vec<Option<Color>> = vec![None; n];
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    for start in 0..n {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(Color::Black);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let cu = color[u].unwrap();
            for &w in &adjacency[u] {
                match color[w] {
                    None => {
                        color[w] = Some(cu.opposite());
                        parent[w] = u;
                        depth[w] = depth[u] + 1;
                        queue.push_back(w);
                    }
                    Some(cw) if cw == cu => {
                        return Err(GraphError::NotBipartite {
                            cycle: tree_cycle(&parent, &depth, u, w),
                        });
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(color.into_iter().map(Option::unwrap).collect())
}

/// Closes the BFS-tree paths from `u` and `w` to their common ancestor.
fn tree_cycle(parent: &[usize], depth: &[usize], u: Vertex, w: Vertex) -> Vec<Vertex> {
    let (mut a, mut b) = (u, w);
    let mut left = vec![a];
    let mut right = vec![b];
    while depth[a] > depth[b] {
        a = parent[a];
        left.push(a);
    }
    while depth[b] > depth[a] {
        b = parent[b];
        right.push(b);
    }
    while a != b {
        a = parent[a];
        b = parent[b];
        left.push(a);
        right.push(b);
    }
    right.pop();
    left.extend(right.into_iter().rev());
    left
}

/// Vertex partition `N_0, N_1, ...` by distance from a basis set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceLevels {
    basis: Vec<Vertex>,
    level_of: Vec<Option<usize>>,
    levels: Vec<Vec<Vertex>>,
}

impl DistanceLevels {
    pub fn basis(&self) -> &[Vertex] {
        &self.basis
    }

    /// Distance to the basis, `None` when unreached.
    pub fn level(&self, v: Vertex) -> Option<usize> {
        self.level_of[v]
    }

    pub fn is_at(&self, v: Vertex, i: usize) -> bool {
        self.level_of[v] == Some(i)
    }

    /// Vertices of level `i`, ascending; empty beyond the last level.
    pub fn at(&self, i: usize) -> &[Vertex] {
        self.levels.get(i).map_or(&[], Vec::as_slice)
    }

    pub fn max_level(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn levels(&self) -> &[Vec<Vertex>] {
        &self.levels
    }

    pub fn unreached(&self) -> Vec<Vertex> {
        (0..self.level_of.len()).filter(|&v| self.level_of[v].is_none()).collect()
    }
}

/// Named graphs used across the test suites.
pub mod fixtures {
    use super::{BipartiteGraph, Vertex};

    pub fn path(n: usize) -> BipartiteGraph {
        let edges: Vec<(Vertex, Vertex)> = (1..n).map(|i| (i - 1, i)).collect();
        BipartiteGraph::from_edges(n, &edges).unwrap()
    }

    /// Even cycle `0-1-...-(n-1)-0`.
    pub fn cycle(n: usize) -> BipartiteGraph {
        assert!(n >= 4 && n.is_multiple_of(2), "bipartite cycles need even length >= 4");
        let mut edges: Vec<(Vertex, Vertex)> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((n - 1, 0));
        BipartiteGraph::from_edges(n, &edges).unwrap()
    }

    /// `K_{1,k}` with center 0.
    pub fn star(k: usize) -> BipartiteGraph {
        let edges: Vec<(Vertex, Vertex)> = (1..=k).map(|i| (0, i)).collect();
        BipartiteGraph::from_edges(k + 1, &edges).unwrap()
    }

    pub fn complete_bipartite(a: usize, b: usize) -> BipartiteGraph {
        let mut edges = Vec::with_capacity(a * b);
        for x in 0..a {
            for y in a..a + b {
                edges.push((x, y));
            }
        }
        BipartiteGraph::from_edges(a + b, &edges).unwrap()
    }

    pub fn k33() -> BipartiteGraph {
        complete_bipartite(3, 3)
    }

    /// Leaves 0 and 1 hanging off the support vertex 2.
    pub fn twin_leaf() -> BipartiteGraph {
        BipartiteGraph::from_edges(3, &[(0, 2), (1, 2)]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn path_coloring_alternates() {
        let g = path(4);
        assert_eq!(g.color(0), Color::Black);
        assert_eq!(g.color(1), Color::White);
        assert_eq!(g.color(2), Color::Black);
        assert_eq!(g.color(3), Color::White);
    }

    #[test]
    fn even_cycle_coloring() {
        let g = cycle(4);
        assert_eq!(g.vertices_of_color(Color::Black).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(g.vertices_of_color(Color::White).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn triangle_reports_odd_cycle() {
        let err = BipartiteGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap_err();
        match err {
            GraphError::NotBipartite { mut cycle } => {
                cycle.sort();
                assert_eq!(cycle, vec![0, 1, 2]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn odd_cycle_witness_is_a_closed_walk() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (4, 5)];
        let err = BipartiteGraph::from_edges(6, &edges).unwrap_err();
        let GraphError::NotBipartite { cycle } = err else { panic!() };
        assert_eq!(cycle.len() % 2, 1);
        let has = |a: usize, b: usize| edges.contains(&(a, b)) || edges.contains(&(b, a));
        for i in 0..cycle.len() {
            assert!(has(cycle[i], cycle[(i + 1) % cycle.len()]));
        }
    }

    #[test]
    fn malformed_edges_rejected() {
        assert_eq!(
            BipartiteGraph::from_edges(3, &[(0, 1), (1, 0)]).unwrap_err(),
            GraphError::DuplicateEdge(0, 1)
        );
        assert_eq!(BipartiteGraph::from_edges(3, &[(2, 2)]).unwrap_err(), GraphError::SelfLoop(2));
        assert_eq!(
            BipartiteGraph::from_edges(3, &[(0, 3)]).unwrap_err(),
            GraphError::VertexOutOfRange { vertex: 3, n: 3 }
        );
    }

    #[test]
    fn coloring_normalized_per_component() {
        // Second component starts at 3, which must be black even though it
        // is discovered through nothing but its own id.
        let g = BipartiteGraph::from_edges(6, &[(4, 3), (4, 5), (0, 1)]).unwrap();
        assert_eq!(g.color(3), Color::Black);
        assert_eq!(g.color(4), Color::White);
        assert_eq!(g.color(2), Color::Black);
    }

    #[test]
    fn components() {
        assert_eq!(path(4).components(), vec![vec![0, 1, 2, 3]]);
        let g = BipartiteGraph::from_edges(6, &[(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        assert_eq!(g.components(), vec![vec![0, 1, 2], vec![3, 4, 5]]);
        let g = BipartiteGraph::from_edges(3, &[]).unwrap();
        assert_eq!(g.components(), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn levels_on_paths_and_cycles() {
        let lv = path(6).bfs_levels(&[0]).unwrap();
        assert_eq!(lv.levels(), &[vec![0], vec![1], vec![2], vec![3], vec![4], vec![5]]);
        let lv = path(4).bfs_levels(&[0, 3]).unwrap();
        assert_eq!(lv.at(0), &[0, 3]);
        assert_eq!(lv.at(1), &[1, 2]);
        assert_eq!(lv.max_level(), 1);
        let lv = cycle(8).bfs_levels(&[0]).unwrap();
        assert_eq!(lv.max_level(), 4);
        assert_eq!(lv.at(4), &[4]);
        assert_eq!(path(3).bfs_levels(&[]).unwrap_err(), GraphError::EmptyBasis);
    }

    #[test]
    fn unreached_vertices_only_across_components() {
        let g = BipartiteGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let lv = g.bfs_levels(&[0]).unwrap();
        assert_eq!(lv.unreached(), vec![2, 3]);
    }

    #[test]
    fn join_predicates() {
        assert!(star(3).is_join(0, &[1, 2, 3]));
        assert!(!path(4).is_join(0, &[1, 3]));
        assert!(path(4).is_join(0, &[]));
        assert!(path(4).is_cojoin(0, &[2, 3]));
    }

    #[test]
    fn distances() {
        assert_eq!(path(4).distance(0, 3), Some(3));
        assert_eq!(cycle(6).distance(0, 3), Some(3));
        let g = BipartiteGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.distance(0, 3), None);
    }

    #[test]
    fn induced_subgraph_relabels() {
        let (sub, map) = cycle(6).induced_subgraph(&[5, 0, 1, 2]);
        assert_eq!(map, vec![0, 1, 2, 5]);
        assert_eq!(sub.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 3), (1, 2)]);
    }
}
