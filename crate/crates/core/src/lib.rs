//! Efficient domination (perfect codes) on P8-free bipartite graphs.
//!
//! [`solver::solve`] decides whether a graph has an efficient dominating
//! set, i.e. a vertex set `D` with `|N[v] ∩ D| = 1` for every vertex `v`,
//! and returns a verified certificate when one exists. [`oracle`] is an
//! independent exponential search used to cross-check it.

pub mod graph;
pub mod harness;
pub mod oracle;
pub mod pattern;
pub mod reduce;
pub mod solver;

pub use graph::{BipartiteGraph, Color, DistanceLevels, GraphError, Vertex};
pub use oracle::{enumerate_eds, has_eds, verify_certificate, EdsCertificate, Verdict};
pub use solver::{solve, solve_with, Outcome, SolveError, SolveOptions, SolveResult, SolveTrace};
