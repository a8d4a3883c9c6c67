//! Seeded instance generators. All randomness comes from a ChaCha8 stream
//! seeded with the caller's seed, so outputs are reproducible across
//! platforms.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{BipartiteGraph, Vertex};
use crate::pattern::is_pk_free;

/// Attempts before [`gen_random_p8free`] gives up.
pub const MAX_RETRIES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("no P8-free sample in {attempts} attempts at n = {n}, p = {p}; try a larger or much smaller p")]
    RetriesExhausted { n: usize, p: f64, attempts: usize },
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random bipartite graph with parts of sizes `⌊n/2⌋` and `⌈n/2⌉` (vertex
/// ids shuffled), each cross pair an edge with probability `p`, resampled
/// until it has no induced P8.
pub fn gen_random_p8free(n: usize, p: f64, seed: u64) -> Result<BipartiteGraph, GenError> {
    if n < 2 {
        return Err(GenError::BadParameter(format!("n = {n}, need n >= 2")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(GenError::BadParameter(format!("p = {p}, need 0 < p < 1")));
    }
    let mut rng = rng_for(seed);
    for _ in 0..MAX_RETRIES {
        let g = sample_bipartite(n, p, &mut rng);
        if is_pk_free(&g, 8) {
            return Ok(g);
        }
    }
    Err(GenError::RetriesExhausted {
        n,
        p,
        attempts: MAX_RETRIES,
    })
}

fn sample_bipartite(n: usize, p: f64, rng: &mut ChaCha8Rng) -> BipartiteGraph {
    let mut ids: Vec<Vertex> = (0..n).collect();
    ids.shuffle(rng);
    let (left, right) = ids.split_at(n / 2);
    let mut edges = Vec::new();
    for &a in left {
        for &b in right {
            if rng.gen_bool(p) {
                edges.push((a.min(b), a.max(b)));
            }
        }
    }
    BipartiteGraph::from_edges(n, &edges).expect("cross edges form a bipartite graph")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StructuredKind {
    Path,
    Cycle,
    Star,
    CompleteBipartite,
    RandomTree,
    BipartitePermutation,
}

impl StructuredKind {
    pub const ALL: [StructuredKind; 6] = [
        StructuredKind::Path,
        StructuredKind::Cycle,
        StructuredKind::Star,
        StructuredKind::CompleteBipartite,
        StructuredKind::RandomTree,
        StructuredKind::BipartitePermutation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StructuredKind::Path => "path",
            StructuredKind::Cycle => "cycle",
            StructuredKind::Star => "star",
            StructuredKind::CompleteBipartite => "complete_bipartite",
            StructuredKind::RandomTree => "random_tree",
            StructuredKind::BipartitePermutation => "bipartite_permutation",
        }
    }
}

impl fmt::Display for StructuredKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StructuredKind {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StructuredKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().replace('_', "-") == s)
            .ok_or_else(|| GenError::BadParameter(format!("unknown kind {s:?}")))
    }
}

/// Deterministic families. `star` has `n - 1` leaves around vertex 0;
/// `complete_bipartite` splits `n` as evenly as possible.
pub fn gen_structured(kind: StructuredKind, n: usize, seed: u64) -> Result<BipartiteGraph, GenError> {
    let bad = |why: &str| Err(GenError::BadParameter(format!("{kind} with n = {n}: {why}")));
    let edges: Vec<(Vertex, Vertex)> = match kind {
        StructuredKind::Path => (1..n).map(|i| (i - 1, i)).collect(),
        StructuredKind::Cycle => {
            if n < 4 || n % 2 == 1 {
                return bad("need an even n >= 4");
            }
            (0..n).map(|i| (i, (i + 1) % n)).collect()
        }
        StructuredKind::Star => {
            if n == 0 {
                return bad("need n >= 1");
            }
            (1..n).map(|i| (0, i)).collect()
        }
        StructuredKind::CompleteBipartite => {
            let a = n / 2;
            (0..a).flat_map(|x| (a..n).map(move |y| (x, y))).collect()
        }
        StructuredKind::RandomTree => {
            let mut rng = rng_for(seed);
            (1..n).map(|i| (rng.gen_range(0..i), i)).collect()
        }
        StructuredKind::BipartitePermutation => permutation_edges(n, seed),
    };
    Ok(BipartiteGraph::from_edges(n, &edges).expect("generated families are bipartite"))
}

/// Inversion graph of a permutation that is the union of two increasing
/// sequences, hence bipartite. A random permutation of `0..n` gives every
/// vertex a distinct key; black vertex `x` is placed at value `key(x) + w`
/// and white `y` at `key(y)`, so `x` and `y` are inverted exactly when
/// `key(x) < key(y) < key(x) + w`. The window `w` is drawn from
/// `[n/4, n/2]`.
fn permutation_edges(n: usize, seed: u64) -> Vec<(Vertex, Vertex)> {
    if n < 2 {
        return Vec::new();
    }
    let mut rng = rng_for(seed);
    let mut key: Vec<usize> = (0..n).collect();
    key.shuffle(&mut rng);
    let mut black = vec![false; n];
    let mut ids: Vec<Vertex> = (0..n).collect();
    ids.shuffle(&mut rng);
    for &v in &ids[..n / 2] {
        black[v] = true;
    }
    let w = rng.gen_range((n / 4).max(1)..=(n / 2).max(1));
    let mut edges = Vec::new();
    for x in (0..n).filter(|&x| black[x]) {
        for y in (0..n).filter(|&y| !black[y]) {
            if key[x] < key[y] && key[y] < key[x] + w {
                edges.push((x.min(y), x.max(y)));
            }
        }
    }
    edges
}

/// A P8-free bipartite permutation graph on `n` vertices: a skeleton of
/// at most 24 vertices is drawn with [`gen_structured`] until it is P8-free,
/// then every skeleton vertex is replaced by a class of false twins with
/// random sizes summing to `n`. Twin substitution keeps the graph a
/// bipartite permutation graph and creates no new induced paths on four or
/// more vertices. Vertex ids are shuffled.
pub fn gen_permutation_p8free(n: usize, seed: u64) -> Result<BipartiteGraph, GenError> {
    if n < 2 {
        return Err(GenError::BadParameter(format!("n = {n}, need n >= 2")));
    }
    let mut rng = rng_for(seed);
    let mut skeleton = None;
    for _ in 0..MAX_RETRIES {
        let s = rng.gen_range(2..=n.min(24));
        let g = gen_structured(StructuredKind::BipartitePermutation, s, rng.gen())?;
        if is_pk_free(&g, 8) {
            skeleton = Some(g);
            break;
        }
    }
    let skeleton = skeleton.ok_or(GenError::RetriesExhausted {
        n,
        p: f64::NAN,
        attempts: MAX_RETRIES,
    })?;
    let s = skeleton.n();
    let mut owner: Vec<Vertex> = (0..s).chain((s..n).map(|_| rng.gen_range(0..s))).collect();
    owner.shuffle(&mut rng);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if skeleton.has_edge(owner[a], owner[b]) {
                edges.push((a, b));
            }
        }
    }
    Ok(BipartiteGraph::from_edges(n, &edges).expect("blow-up of a bipartite graph is bipartite"))
}
