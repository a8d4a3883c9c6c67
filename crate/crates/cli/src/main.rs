//! `edskit`: decide efficient domination on P8-free bipartite graphs.
//!
//! Exit codes: 0 e.d.s. found / valid / clean run, 1 no e.d.s. / invalid,
//! 2 usage or input error, 3 internal anomaly (budget exhausted, solver
//! disagreeing with the oracle).

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use edskit::harness::bench::{render_table, run_bench};
use edskit::harness::difftest::{run_difftest, Verdict as CaseVerdict};
use edskit::harness::generate::{gen_permutation_p8free, gen_random_p8free, gen_structured, StructuredKind};
use edskit::harness::io::{parse_certificate, parse_instance, render_instance, ResultRecord, Status};
use edskit::oracle::{enumerate_eds, verify_certificate, Verdict};
use edskit::solver::{solve_with, SolveError, SolveOptions};
use edskit::BipartiteGraph;

const EXIT_EDS: u8 = 0;
const EXIT_NO_EDS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ANOMALY: u8 = 3;

#[derive(Parser)]
#[command(name = "edskit", version, about = "Efficient dominating sets in P8-free bipartite graphs")]
struct Cli {
    /// Machine-readable output (one JSON object per line).
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the polynomial solver; prints a JSON result record.
    Solve {
        file: PathBuf,
        /// Branch budget (default 10·n⁴).
        #[arg(long)]
        budget: Option<u64>,
        /// Trust that the input has no induced P8.
        #[arg(long)]
        skip_p8_check: bool,
    },
    /// Exhaustive search; practical up to roughly 40 vertices.
    Oracle {
        file: PathBuf,
        /// List every e.d.s. instead of the first.
        #[arg(long)]
        all: bool,
    },
    /// Check a certificate: a file of vertex ids, or the ids inline ("0 3").
    Verify { file: PathBuf, certificate: String },
    /// Write a generated instance to stdout or `--out`.
    Generate {
        /// random_p8free, permutation_p8free, or a structured kind (path,
        /// cycle, star, complete_bipartite, random_tree, bipartite_permutation).
        kind: String,
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Edge probability for random_p8free.
        #[arg(short, long, default_value_t = 0.2)]
        p: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare solver and oracle on a seeded stream of random instances.
    Difftest {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Vertex-count range, "a..b" inclusive.
        #[arg(long, default_value = "6..18", value_parser = parse_range)]
        sizes: RangeInclusive<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        budget: Option<u64>,
        /// Where the shrunk first mismatch is written.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Branch counts and wall time per size.
    Bench {
        /// Sizes: comma-separated values and "a..b" ranges.
        #[arg(long, default_value = "10..22,50,100,150,200", value_parser = parse_sizes)]
        sizes: Sizes,
        #[arg(long, default_value_t = 10)]
        per_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let s = s.trim();
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    let a: usize = a.trim().parse().map_err(|_| format!("bad range {s:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad range {s:?}"))?;
    if a > b {
        return Err(format!("empty range {s:?}"));
    }
    Ok(a..=b)
}

#[derive(Clone, Debug)]
struct Sizes(Vec<usize>);

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        out.extend(parse_range(part)?);
    }
    Ok(Sizes(out))
}

/// Failure carrying the exit code it should produce.
struct Exit(u8, anyhow::Error);

fn usage(e: impl Into<anyhow::Error>) -> Exit {
    Exit(EXIT_USAGE, e.into())
}

fn load(file: &Path) -> Result<BipartiteGraph, Exit> {
    let text = fs::read_to_string(file)
        .with_context(|| format!("reading {}", file.display()))
        .map_err(usage)?;
    parse_instance(&text)
        .with_context(|| format!("parsing {}", file.display()))
        .map_err(usage)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("EDSKIT_THREADS") {
        let threads: usize = v.trim().parse().with_context(|| format!("EDSKIT_THREADS={v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Exit> {
    configure_threads().map_err(usage)?;
    match cli.command {
        Command::Solve {
            file,
            budget,
            skip_p8_check,
        } => {
            let g = load(&file)?;
            let result = solve_with(
                &g,
                &SolveOptions {
                    budget,
                    check_p8: !skip_p8_check,
                    ..SolveOptions::default()
                },
            );
            let record = ResultRecord::from_solve(&g, &result);
            println!("{}", record.to_json_line());
            Ok(match (&result, record.status) {
                (_, Status::Eds) => EXIT_EDS,
                (_, Status::NoEds) => EXIT_NO_EDS,
                (Err(SolveError::NotP8Free { .. }), _) => EXIT_USAGE,
                _ => EXIT_ANOMALY,
            })
        }
        Command::Oracle { file, all } => {
            let g = load(&file)?;
            let found = enumerate_eds(&g, if all { None } else { Some(1) });
            if cli.json {
                println!("{}", serde_json::json!({ "eds": found }));
            } else if found.is_empty() {
                println!("NO_EDS");
            } else {
                for c in &found {
                    println!("EDS {c}");
                }
            }
            Ok(if found.is_empty() { EXIT_NO_EDS } else { EXIT_EDS })
        }
        Command::Verify { file, certificate } => {
            let g = load(&file)?;
            let text = match fs::read_to_string(&certificate) {
                Ok(t) => t,
                Err(_) => certificate.clone(),
            };
            let d = parse_certificate(&text, g.n()).map_err(usage)?;
            let verdict = verify_certificate(&g, &d);
            if cli.json {
                println!("{}", serde_json::to_string(&verdict).expect("serializable"));
            } else {
                match &verdict {
                    Verdict::Valid => println!("VALID"),
                    Verdict::Invalid(vs) => {
                        println!("INVALID");
                        for v in vs {
                            println!("vertex {} dominated {} times", v.vertex, v.coverage);
                        }
                    }
                }
            }
            Ok(if verdict.is_valid() { EXIT_EDS } else { EXIT_NO_EDS })
        }
        Command::Generate { kind, n, seed, p, out } => {
            let g = match kind.as_str() {
                "random_p8free" | "random-p8free" => gen_random_p8free(n, p, seed),
                "permutation_p8free" | "permutation-p8free" => gen_permutation_p8free(n, seed),
                other => other
                    .parse::<StructuredKind>()
                    .and_then(|k| gen_structured(k, n, seed)),
            }
            .map_err(usage)?;
            let text = render_instance(&g);
            match out {
                Some(path) => fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(usage)?,
                None => print!("{text}"),
            }
            Ok(EXIT_EDS)
        }
        Command::Difftest {
            count,
            sizes,
            seed,
            budget,
            out,
        } => {
            let summary = run_difftest(count, sizes, seed, budget, Some(&out))
                .context("writing the mismatch file")
                .map_err(|e| Exit(EXIT_ANOMALY, e))?;
            if cli.json {
                for r in &summary.reports {
                    let (verdict, detail) = match &r.verdict {
                        CaseVerdict::Agree { eds } => (if *eds { "EDS" } else { "NO_EDS" }, None),
                        CaseVerdict::Mismatch { detail } => ("MISMATCH", Some(detail.as_str())),
                        CaseVerdict::Skipped { reason } => ("SKIPPED", Some(reason.as_str())),
                    };
                    println!(
                        "{}",
                        serde_json::json!({
                            "index": r.spec.index, "n": r.spec.n, "p": r.spec.p, "seed": r.spec.seed,
                            "instance_hash": r.instance_hash, "branches": r.branches,
                            "verdict": verdict, "detail": detail,
                        })
                    );
                }
            }
            println!(
                "{} cases, {} mismatches, {} skipped, {} with an e.d.s.",
                summary.reports.len(),
                summary.mismatches,
                summary.skipped,
                summary.with_eds
            );
            if let Some((g, path)) = &summary.first_mismatch {
                let at = path.as_ref().map_or("-".to_string(), |p| p.display().to_string());
                println!("first mismatch shrunk to n = {}, m = {}, written to {at}", g.n(), g.edge_count());
            }
            Ok(if summary.mismatches == 0 { EXIT_EDS } else { EXIT_ANOMALY })
        }
        Command::Bench {
            sizes: Sizes(sizes),
            per_size,
            seed,
        } => {
            if sizes.is_empty() {
                return Err(usage(anyhow::anyhow!("no sizes given")));
            }
            let rows = run_bench(sizes, per_size, seed);
            if cli.json {
                for r in &rows {
                    println!("{}", serde_json::to_string(r).expect("serializable"));
                }
            } else {
                print!("{}", render_table(&rows));
            }
            let over: usize = rows.iter().map(|r| r.budget_exceeded).sum();
            Ok(if over == 0 { EXIT_EDS } else { EXIT_ANOMALY })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("edskit: {e:#}");
            ExitCode::from(code)
        }
    }
}

