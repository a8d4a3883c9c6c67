//! Instance files are a header line `n m` followed by `m` lines `u v`
//! (0-based ids, whitespace separated). Certificates are whitespace
//! separated vertex ids.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{BipartiteGraph, GraphError, Vertex};
use crate::oracle::EdsCertificate;
use crate::solver::{SolveError, SolveResult, SolveTrace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("missing header line \"n m\"")]
    MissingHeader,
    #[error("line {line}: expected two integers, got {text:?}")]
    BadLine { line: usize, text: String },
    #[error("header declares {expected} edges but the file has {found}")]
    EdgeCount { expected: usize, found: usize },
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn pair(line: usize, text: &str) -> Result<(usize, usize), ParseError> {
    let bad = || ParseError::BadLine {
        line,
        text: text.to_string(),
    };
    let mut it = text.split_whitespace().map(|t| t.parse::<usize>());
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(bad()),
    }
}

/// Blank lines are ignored anywhere.
pub fn parse_instance(text: &str) -> Result<BipartiteGraph, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, htext) = lines.next().ok_or(ParseError::MissingHeader)?;
    let (n, m) = pair(hline, htext)?;
    let mut edges = Vec::with_capacity(m);
    for (line, text) in lines {
        edges.push(pair(line, text)?);
    }
    if edges.len() != m {
        return Err(ParseError::EdgeCount {
            expected: m,
            found: edges.len(),
        });
    }
    Ok(BipartiteGraph::from_edges(n, &edges)?)
}

/// Canonical rendering: edges as `u v` with `u < v`, ascending.
pub fn render_instance(g: &BipartiteGraph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

/// SHA-256 of the canonical rendering, lowercase hex.
pub fn instance_hash(g: &BipartiteGraph) -> String {
    hex::encode(Sha256::digest(render_instance(g).as_bytes()))
}

pub fn parse_certificate(text: &str, n: usize) -> Result<Vec<Vertex>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            let v: Vertex = tok.parse().map_err(|_| ParseError::BadLine {
                line: i + 1,
                text: line.to_string(),
            })?;
            if v >= n {
                return Err(ParseError::VertexOutOfRange { vertex: v, n });
            }
            out.push(v);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Eds,
    NoEds,
    Error,
}

/// One line of machine-readable output per instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eds: Option<EdsCertificate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stats: Option<SolveTrace>,
    pub instance_hash: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl ResultRecord {
    pub fn from_solve(g: &BipartiteGraph, result: &Result<SolveResult, SolveError>) -> Self {
        let instance_hash = instance_hash(g);
        match result {
            Ok(r) => ResultRecord {
                status: if r.has_eds() { Status::Eds } else { Status::NoEds },
                eds: r.certificate().cloned(),
                stats: Some(r.trace.clone()),
                instance_hash,
                error: None,
            },
            Err(e) => ResultRecord {
                status: Status::Error,
                eds: None,
                stats: None,
                instance_hash,
                error: Some(e.to_string()),
            },
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}
