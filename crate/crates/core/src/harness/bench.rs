//! Branch-count and wall-time profile per instance size.

use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use super::difftest::edge_probability;
use super::generate::{gen_permutation_p8free, gen_random_p8free, GenError};
use crate::graph::BipartiteGraph;
use crate::solver::{default_budget, solve_with, SolveError, SolveOptions};

/// Instance families the benchmark draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// [`gen_random_p8free`] over the difftest density schedule; only up to
    /// [`RANDOM_MAX_N`] vertices, beyond which rejection rarely succeeds.
    Random,
    /// [`gen_permutation_p8free`].
    Permutation,
}

pub const RANDOM_MAX_N: usize = 30;

impl Family {
    pub fn generate(self, n: usize, seed: u64) -> Result<BipartiteGraph, GenError> {
        match self {
            Family::Random => gen_random_p8free(n, edge_probability(n, seed as usize), seed),
            Family::Permutation => gen_permutation_p8free(n, seed),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub family: Family,
    pub n: usize,
    pub instances: usize,
    pub with_eds: usize,
    pub budget: u64,
    pub budget_exceeded: usize,
    pub median_branches: u64,
    pub max_branches: u64,
    #[serde(serialize_with = "secs")]
    pub median_wall: Duration,
    #[serde(serialize_with = "secs")]
    pub max_wall: Duration,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

fn median<T: Copy + Ord + Default>(mut xs: Vec<T>) -> T {
    xs.sort_unstable();
    xs.get(xs.len() / 2).copied().unwrap_or_default()
}

/// Solves `per_size` instances (seeds `seed..seed + per_size`) of `family`
/// at size `n`. Instances the generator cannot produce are left out.
pub fn bench_size(family: Family, n: usize, per_size: usize, seed: u64) -> Option<BenchRow> {
    if family == Family::Random && n > RANDOM_MAX_N {
        return None;
    }
    let budget = default_budget(n);
    let runs: Vec<(bool, bool, u64, Duration)> = (0..per_size as u64)
        .into_par_iter()
        .filter_map(|i| {
            let g = family.generate(n, seed.wrapping_add(i)).ok()?;
            let r = solve_with(
                &g,
                &SolveOptions {
                    budget: Some(budget),
                    ..SolveOptions::default()
                },
            );
            Some(match r {
                Ok(r) => (r.has_eds(), false, r.trace.branches, r.trace.wall_time),
                Err(SolveError::BudgetExceeded { .. }) => (false, true, budget, Duration::ZERO),
                Err(e) => panic!("solver failed on a generated instance: {e}"),
            })
        })
        .collect();
    if runs.is_empty() {
        return None;
    }
    Some(BenchRow {
        family,
        n,
        instances: runs.len(),
        with_eds: runs.iter().filter(|r| r.0).count(),
        budget,
        budget_exceeded: runs.iter().filter(|r| r.1).count(),
        median_branches: median(runs.iter().map(|r| r.2).collect()),
        max_branches: runs.iter().map(|r| r.2).max().unwrap_or(0),
        median_wall: median(runs.iter().map(|r| r.3).collect()),
        max_wall: runs.iter().map(|r| r.3).max().unwrap_or_default(),
    })
}

pub fn run_bench(sizes: impl IntoIterator<Item = usize>, per_size: usize, seed: u64) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for n in sizes {
        for family in [Family::Random, Family::Permutation] {
            rows.extend(bench_size(family, n, per_size, seed));
        }
    }
    rows
}

/// Plain-text table, one row per (family, n).
pub fn render_table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:<12} {:>5} {:>6} {:>5} {:>8} {:>10} {:>10} {:>11} {:>11}\n",
        "family", "n", "inst", "eds", "over", "med_br", "max_br", "med_wall_s", "max_wall_s"
    );
    for r in rows {
        let family = match r.family {
            Family::Random => "random",
            Family::Permutation => "permutation",
        };
        out.push_str(&format!(
            "{:<12} {:>5} {:>6} {:>5} {:>8} {:>10} {:>10} {:>11.6} {:>11.6}\n",
            family,
            r.n,
            r.instances,
            r.with_eds,
            r.budget_exceeded,
            r.median_branches,
            r.max_branches,
            r.median_wall.as_secs_f64(),
            r.max_wall.as_secs_f64()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bench() {
        let rows = run_bench([12, 40], 4, 3);
        assert!(rows.iter().any(|r| r.family == Family::Permutation && r.n == 40));
        assert!(rows.iter().all(|r| r.budget_exceeded == 0));
        assert!(!rows.iter().any(|r| r.family == Family::Random && r.n == 40));
        assert!(render_table(&rows).lines().count() >= 3);
    }
}
