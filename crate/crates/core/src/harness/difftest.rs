//! Differential testing of the solver against the exhaustive oracle.
//!
//! The instance stream is a pure function of the seed: instance `i` gets its
//! size, edge probability and generator seed from a ChaCha8 stream, so runs
//! are reproducible and can be fanned out over threads while reports stay in
//! stream order.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use super::generate::{gen_random_p8free, rng_for, GenError};
use super::io::{instance_hash, render_instance};
use crate::graph::{BipartiteGraph, Vertex};
use crate::oracle::{has_eds, verify_certificate};
use crate::pattern::is_pk_free;
use crate::solver::{solve_with, SolveOptions};

/// Edge probability for slot `k` of five at size `n`: three sparse settings
/// around `c/n` and two dense ones. Mid-range densities almost never give a
/// P8-free sample beyond about 18 vertices.
pub fn edge_probability(n: usize, slot: usize) -> f64 {
    let p = match slot % 5 {
        0 => 1.5 / n as f64,
        1 => 2.5 / n as f64,
        2 => 3.5 / n as f64,
        3 => 0.8,
        _ => 0.9,
    };
    p.clamp(0.01, 0.95)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaseSpec {
    pub index: usize,
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

impl CaseSpec {
    pub fn generate(&self) -> Result<BipartiteGraph, GenError> {
        gen_random_p8free(self.n, self.p, self.seed)
    }
}

pub fn case_stream(count: usize, sizes: RangeInclusive<usize>, seed: u64) -> Vec<CaseSpec> {
    let mut rng = rng_for(seed);
    (0..count)
        .map(|index| {
            let n = rng.gen_range(sizes.clone());
            let slot = rng.gen_range(0..5);
            CaseSpec {
                index,
                n,
                p: edge_probability(n, slot),
                seed: rng.gen(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Agree { eds: bool },
    Mismatch { detail: String },
    /// The generator gave up; not counted either way.
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseReport {
    pub spec: CaseSpec,
    pub instance_hash: Option<String>,
    pub branches: u64,
    pub verdict: Verdict,
}

/// `None` when solver and oracle agree and any certificate verifies.
pub fn compare(g: &BipartiteGraph, budget: Option<u64>) -> (Option<String>, bool, u64) {
    let truth = has_eds(g);
    let result = solve_with(g, &SolveOptions { budget, ..SolveOptions::default() });
    match result {
        Err(e) => (Some(format!("solver error: {e}")), truth, 0),
        Ok(r) => {
            let branches = r.trace.branches;
            if r.has_eds() != truth {
                return (
                    Some(format!("solver says {}, oracle says {}", r.has_eds(), truth)),
                    truth,
                    branches,
                );
            }
            if let Some(c) = r.certificate() {
                if !verify_certificate(g, c.members()).is_valid() {
                    return (Some(format!("certificate {c} does not verify")), truth, branches);
                }
            }
            (None, truth, branches)
        }
    }
}

pub fn run_case(spec: CaseSpec, budget: Option<u64>) -> CaseReport {
    let g = match spec.generate() {
        Ok(g) => g,
        Err(e) => {
            return CaseReport {
                spec,
                instance_hash: None,
                branches: 0,
                verdict: Verdict::Skipped { reason: e.to_string() },
            }
        }
    };
    let (problem, truth, branches) = compare(&g, budget);
    CaseReport {
        spec,
        instance_hash: Some(instance_hash(&g)),
        branches,
        verdict: match problem {
            None => Verdict::Agree { eds: truth },
            Some(detail) => Verdict::Mismatch { detail },
        },
    }
}

#[derive(Clone, Debug)]
pub struct DiffSummary {
    pub reports: Vec<CaseReport>,
    pub mismatches: usize,
    pub skipped: usize,
    pub with_eds: usize,
    /// Shrunk first mismatch and where it was written.
    pub first_mismatch: Option<(BipartiteGraph, Option<PathBuf>)>,
}

/// Runs the whole stream in parallel on the current rayon pool. The first
/// mismatch (in stream order) is shrunk and, if `out_dir` is given, written
/// there as `mismatch-<hash prefix>.txt`.
pub fn run_difftest(
    count: usize,
    sizes: RangeInclusive<usize>,
    seed: u64,
    budget: Option<u64>,
    out_dir: Option<&Path>,
) -> std::io::Result<DiffSummary> {
    let specs = case_stream(count, sizes, seed);
    let reports: Vec<CaseReport> = specs.par_iter().map(|&s| run_case(s, budget)).collect();
    let mismatches = reports
        .iter()
        .filter(|r| matches!(r.verdict, Verdict::Mismatch { .. }))
        .count();
    let skipped = reports
        .iter()
        .filter(|r| matches!(r.verdict, Verdict::Skipped { .. }))
        .count();
    let with_eds = reports
        .iter()
        .filter(|r| r.verdict == Verdict::Agree { eds: true })
        .count();
    let mut first_mismatch = None;
    if let Some(bad) = reports.iter().find(|r| matches!(r.verdict, Verdict::Mismatch { .. })) {
        let g = bad.spec.generate().expect("generated before");
        let small = shrink(&g, |h| compare(h, budget).0.is_some());
        let path = match out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("mismatch-{}.txt", &instance_hash(&small)[..12]));
                std::fs::write(&path, render_instance(&small))?;
                Some(path)
            }
            None => None,
        };
        first_mismatch = Some((small, path));
    }
    Ok(DiffSummary {
        reports,
        mismatches,
        skipped,
        with_eds,
        first_mismatch,
    })
}

/// Greedy deletion of edges, then vertices, keeping `failing` true and the
/// graph P8-free, until nothing more can be removed.
pub fn shrink(g: &BipartiteGraph, failing: impl Fn(&BipartiteGraph) -> bool) -> BipartiteGraph {
    let mut cur = g.clone();
    loop {
        let mut changed = false;
        let edges: Vec<(Vertex, Vertex)> = cur.edges().collect();
        for skip in 0..edges.len() {
            let rest: Vec<_> = edges.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &e)| e).collect();
            let h = BipartiteGraph::from_edges(cur.n(), &rest).expect("subgraph");
            if is_pk_free(&h, 8) && failing(&h) {
                cur = h;
                changed = true;
                break;
            }
        }
        if changed {
            continue;
        }
        for v in 0..cur.n() {
            let keep: Vec<Vertex> = (0..cur.n()).filter(|&w| w != v).collect();
            let (h, _) = cur.induced_subgraph(&keep);
            if failing(&h) {
                cur = h;
                changed = true;
                break;
            }
        }
        if !changed {
            return cur;
        }
    }
}
