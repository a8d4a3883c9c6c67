//! Ground-truth search for efficient dominating sets.
//!
//! An e.d.s. is an exact cover of the vertex set by closed neighborhoods.
//! The search repeatedly takes the lowest undominated vertex and branches
//! on every vertex of its closed neighborhood (ascending) that can still be
//! added without covering something twice. It runs on any graph, not only
//! bipartite ones, and is practical for full enumeration up to roughly 25
//! vertices and for existence queries up to roughly 40.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{Adjacency, BipartiteGraph, Vertex};

/// An arbitrary simple undirected graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    adjacency: Vec<Vec<Vertex>>,
}

impl SimpleGraph {
    /// Self-loops and repeated edges are dropped.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range");
            if u != v {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        SimpleGraph { adjacency }
    }
}

impl From<&BipartiteGraph> for SimpleGraph {
    fn from(g: &BipartiteGraph) -> Self {
        SimpleGraph {
            adjacency: (0..g.n()).map(|v| g.neighbors(v).to_vec()).collect(),
        }
    }
}

impl Adjacency for SimpleGraph {
    fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }
}

/// A vertex set claimed to dominate every vertex exactly once. Members are
/// kept sorted so certificates compare and print canonically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdsCertificate {
    members: Vec<Vertex>,
}

impl EdsCertificate {
    pub fn new(mut members: Vec<Vertex>) -> Self {
        members.sort_unstable();
        members.dedup();
        EdsCertificate { members }
    }

    pub fn members(&self) -> &[Vertex] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.members.binary_search(&v).is_ok()
    }
}

impl fmt::Display for EdsCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub vertex: Vertex,
    /// `|N[vertex] ∩ D|`, which is not 1.
    pub coverage: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Valid,
    Invalid(Vec<Violation>),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Recounts `|N[v] ∩ d|` for every vertex. Out-of-range members are
/// ignored by the count, so they surface as coverage violations elsewhere
/// only if they matter; callers validate ids beforehand.
pub fn verify_certificate<G: Adjacency + ?Sized>(g: &G, d: &[Vertex]) -> Verdict {
    let n = g.vertex_count();
    let mut member = vec![false; n];
    for &v in d {
        if v < n {
            member[v] = true;
        }
    }
    let violations: Vec<Violation> = (0..n)
        .filter_map(|v| {
            let coverage = member[v] as usize + g.neighbors(v).iter().filter(|&&w| member[w]).count();
            (coverage != 1).then_some(Violation { vertex: v, coverage })
        })
        .collect();
    if violations.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Invalid(violations)
    }
}

struct Search<'a, G: ?Sized> {
    g: &'a G,
    covered: Vec<bool>,
    banned: Vec<bool>,
    chosen: Vec<Vertex>,
    found: Vec<EdsCertificate>,
    limit: usize,
}

impl<G: Adjacency + ?Sized> Search<'_, G> {
    fn can_take(&self, c: Vertex) -> bool {
        !self.banned[c] && !self.covered[c] && self.g.neighbors(c).iter().all(|&w| !self.covered[w])
    }

    fn set(&mut self, c: Vertex, value: bool) {
        self.covered[c] = value;
        for &w in self.g.neighbors(c) {
            self.covered[w] = value;
        }
    }

    fn run(&mut self, from: Vertex) {
        if self.found.len() >= self.limit {
            return;
        }
        let n = self.g.vertex_count();
        let Some(v) = (from..n).find(|&v| !self.covered[v]) else {
            self.found.push(EdsCertificate::new(self.chosen.clone()));
            return;
        };
        let mut candidates: Vec<Vertex> = self.g.neighbors(v).to_vec();
        candidates.push(v);
        candidates.sort_unstable();
        for c in candidates {
            if self.can_take(c) {
                self.set(c, true);
                self.chosen.push(c);
                self.run(v + 1);
                self.chosen.pop();
                self.set(c, false);
            }
        }
    }
}

/// Every e.d.s. that contains all of `required` and none of `forbidden`,
/// up to `max_count` of them (`None` = all), sorted lexicographically.
pub fn enumerate_completions<G: Adjacency + ?Sized>(
    g: &G,
    required: &[Vertex],
    forbidden: &[Vertex],
    max_count: Option<usize>,
) -> Vec<EdsCertificate> {
    let n = g.vertex_count();
    let mut search = Search {
        g,
        covered: vec![false; n],
        banned: vec![false; n],
        chosen: Vec::new(),
        found: Vec::new(),
        limit: max_count.unwrap_or(usize::MAX),
    };
    if search.limit == 0 {
        return Vec::new();
    }
    for &v in forbidden {
        search.banned[v] = true;
    }
    let mut required = required.to_vec();
    required.sort_unstable();
    required.dedup();
    for &v in &required {
        if !search.can_take(v) {
            return Vec::new();
        }
        search.set(v, true);
        search.chosen.push(v);
    }
    search.run(0);
    let mut found = search.found;
    found.sort();
    found
}

/// All e.d.s. of `g` (up to `max_count`), sorted lexicographically.
pub fn enumerate_eds<G: Adjacency + ?Sized>(g: &G, max_count: Option<usize>) -> Vec<EdsCertificate> {
    enumerate_completions(g, &[], &[], max_count)
}

pub fn has_eds<G: Adjacency + ?Sized>(g: &G) -> bool {
    !enumerate_eds(g, Some(1)).is_empty()
}
