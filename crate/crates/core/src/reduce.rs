//! Forced/excluded vertex calculus.
//!
//! A [`VertexLedger`] records which vertices are committed to `D`, which are
//! ruled out, and who dominates whom. Rules inspect the ledger together with
//! the distance levels of the current basis and either commit more vertices,
//! exclude more vertices, or prove that no e.d.s. extends the ledger.
//!
//! The ledger never deletes vertices. Committing `v` marks `N[v]` as
//! dominated and excludes everything within distance two of `v`, so a
//! `Free` vertex always has a completely undominated closed neighborhood.
//! The candidates of an undominated vertex are therefore exactly the `Free`
//! vertices of its closed neighborhood.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::graph::{BipartiteGraph, Color, DistanceLevels, GraphError, Vertex};
use crate::pattern::{region_mask, PathSearcher};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Free,
    InD,
    Excluded,
}

/// Identifies the rule (or commitment) that caused a ledger change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    BasisConflict,
    Commit,
    UnitForced,
    NoCandidate,
    PairLookahead,
    SubsetExclusion,
    TwinForced,
    TwinConflict,
    ChainForced,
    ChainConflict,
    EndpointP7,
    EndpointP6,
    ComponentShape,
    ComponentPair,
    SharedP4Neighbor,
    P4NeighborExclusion,
    ComponentCode,
    Choice,
    ChoiceViolation,
}

/// Rule families, as grouped in the soundness suite and the trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleGroup {
    Commit,
    Unit,
    Subset,
    Pattern,
    Choice,
    Component,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::BasisConflict => "basis-conflict",
            Rule::Commit => "commit",
            Rule::UnitForced => "unit-forced",
            Rule::NoCandidate => "no-candidate",
            Rule::PairLookahead => "pair-lookahead",
            Rule::SubsetExclusion => "subset-exclusion",
            Rule::TwinForced => "twin-forced",
            Rule::TwinConflict => "twin-conflict",
            Rule::ChainForced => "chain-forced",
            Rule::ChainConflict => "chain-conflict",
            Rule::EndpointP7 => "endpoint-p7",
            Rule::EndpointP6 => "endpoint-p6",
            Rule::ComponentShape => "component-shape",
            Rule::ComponentPair => "component-pair",
            Rule::SharedP4Neighbor => "shared-p4-neighbor",
            Rule::P4NeighborExclusion => "p4-neighbor-exclusion",
            Rule::ComponentCode => "component-code",
            Rule::Choice => "choice",
            Rule::ChoiceViolation => "choice-violation",
        }
    }

    pub fn group(self) -> RuleGroup {
        match self {
            Rule::BasisConflict | Rule::Commit => RuleGroup::Commit,
            Rule::UnitForced | Rule::NoCandidate | Rule::PairLookahead => RuleGroup::Unit,
            Rule::SubsetExclusion
            | Rule::TwinForced
            | Rule::TwinConflict
            | Rule::ChainForced
            | Rule::ChainConflict => RuleGroup::Subset,
            Rule::EndpointP7
            | Rule::EndpointP6
            | Rule::ComponentShape
            | Rule::ComponentPair
            | Rule::SharedP4Neighbor
            | Rule::P4NeighborExclusion => RuleGroup::Pattern,
            Rule::Choice | Rule::ChoiceViolation => RuleGroup::Choice,
            Rule::ComponentCode => RuleGroup::Component,
        }
    }

    /// One-line statement of the fact the rule relies on.
    pub fn basis(self) -> &'static str {
        match self {
            Rule::BasisConflict => "two basis vertices are closer than distance 3",
            Rule::Commit => "vertex assumed in D; its neighbors and second neighbors leave the candidate pool",
            Rule::UnitForced => "an undominated vertex has exactly one remaining candidate",
            Rule::NoCandidate => "an undominated vertex has no remaining candidate",
            Rule::PairLookahead => "c is within distance 2 of both candidates of an undominated vertex outside N[c]",
            Rule::SubsetExclusion => {
                "far neighborhood of an undominated v1 inside that of v2: v2 in D would leave v1 undominated"
            }
            Rule::TwinForced => "two undominated vertices share their only far neighbor w, so w is in D",
            Rule::TwinConflict => "twins v1,v2 with two private far neighbors whose only far neighbors are v1,v2",
            Rule::ChainForced => "nested far neighborhoods v1 < v2 with w2 < w1 force v1 and w2",
            Rule::ChainConflict => "three nested far neighborhoods leave a vertex without a dominator",
            Rule::EndpointP7 => "a level-2 vertex ending an induced P7 through levels 0-1 would create a P8",
            Rule::EndpointP6 => "a level-2 vertex ending an induced P6 through levels 0-1 needs a unique level-3 leaf neighbor",
            Rule::ComponentShape => "a closed level-3 component that is a C4 or exactly a P7 has no admissible code",
            Rule::ComponentPair => "level-2 vertices touching several closed level-3 components are dominated twice",
            Rule::SharedP4Neighbor => "a level-2 vertex touching two closed level-3 components with a P4 is dominated twice",
            Rule::P4NeighborExclusion => "a level-2 vertex touching a closed P4 component is dominated inside it",
            Rule::ComponentCode => "a closed level-3 component contains a code with at most one vertex per side",
            Rule::Choice => "after fixing the D-neighbor of a level-2 vertex, each other neighbor has one possible dominator",
            Rule::ChoiceViolation => "a sibling of the chosen D-neighbor has two or more possible far dominators",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Firing {
    pub rule: Rule,
    pub vertices: Vec<Vertex>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Infeasibility {
    pub rule: Rule,
    pub vertices: Vec<Vertex>,
    pub reason: String,
}

impl Infeasibility {
    fn new(rule: Rule, vertices: Vec<Vertex>, reason: impl Into<String>) -> Self {
        Infeasibility {
            rule,
            vertices,
            reason: reason.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleOutcome {
    Progress(Vec<Firing>),
    NoChange,
    Infeasible(Infeasibility),
}

impl RuleOutcome {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, RuleOutcome::Infeasible(_))
    }

    pub fn made_progress(&self) -> bool {
        matches!(self, RuleOutcome::Progress(_))
    }

    fn from_firings(firings: Vec<Firing>) -> Self {
        if firings.is_empty() {
            RuleOutcome::NoChange
        } else {
            RuleOutcome::Progress(firings)
        }
    }
}

#[derive(Clone, Debug)]
pub struct VertexLedger {
    status: Vec<Status>,
    dominated_by: Vec<Option<Vertex>>,
    work_queue: VecDeque<Vertex>,
    queued: Vec<bool>,
    in_d: Vec<Vertex>,
    undominated: usize,
}

impl VertexLedger {
    /// Everything free and undominated; every vertex queued for a unit check.
    pub fn new(n: usize) -> Self {
        VertexLedger {
            status: vec![Status::Free; n],
            dominated_by: vec![None; n],
            work_queue: (0..n).collect(),
            queued: vec![true; n],
            in_d: Vec::new(),
            undominated: n,
        }
    }

    pub fn n(&self) -> usize {
        self.status.len()
    }

    pub fn status(&self, v: Vertex) -> Status {
        self.status[v]
    }

    pub fn dominated_by(&self, v: Vertex) -> Option<Vertex> {
        self.dominated_by[v]
    }

    pub fn is_dominated(&self, v: Vertex) -> bool {
        self.dominated_by[v].is_some()
    }

    /// Committed vertices in commitment order.
    pub fn in_d(&self) -> &[Vertex] {
        &self.in_d
    }

    pub fn in_d_sorted(&self) -> Vec<Vertex> {
        let mut d = self.in_d.clone();
        d.sort_unstable();
        d
    }

    pub fn excluded(&self) -> Vec<Vertex> {
        (0..self.n()).filter(|&v| self.status[v] == Status::Excluded).collect()
    }

    pub fn undominated_count(&self) -> usize {
        self.undominated
    }

    pub fn is_complete(&self) -> bool {
        self.undominated == 0
    }

    pub fn pending(&self) -> usize {
        self.work_queue.len()
    }

    /// Free vertices of `N[v]`, ascending.
    pub fn candidates(&self, g: &BipartiteGraph, v: Vertex) -> Vec<Vertex> {
        let mut c: Vec<Vertex> = g
            .neighbors(v)
            .iter()
            .copied()
            .chain(std::iter::once(v))
            .filter(|&w| self.status[w] == Status::Free)
            .collect();
        c.sort_unstable();
        c
    }

    pub fn candidate_count(&self, g: &BipartiteGraph, v: Vertex) -> usize {
        (self.status[v] == Status::Free) as usize
            + g.neighbors(v).iter().filter(|&&w| self.status[w] == Status::Free).count()
    }

    fn enqueue_closed(&mut self, g: &BipartiteGraph, v: Vertex) {
        for w in std::iter::once(v).chain(g.neighbors(v).iter().copied()) {
            if !self.queued[w] && self.dominated_by[w].is_none() {
                self.queued[w] = true;
                self.work_queue.push_back(w);
            }
        }
    }

    fn set_excluded(&mut self, g: &BipartiteGraph, v: Vertex) -> bool {
        if self.status[v] == Status::Free {
            self.status[v] = Status::Excluded;
            self.enqueue_closed(g, v);
            true
        } else {
            false
        }
    }

    /// Commits `v` to `D`. Returns whether anything changed.
    fn commit(&mut self, g: &BipartiteGraph, v: Vertex, rule: Rule) -> Result<bool, Infeasibility> {
        match self.status[v] {
            Status::InD => return Ok(false),
            Status::Excluded => {
                let reason = match self.dominated_by[v] {
                    Some(d) => format!("{v} is already dominated by {d}"),
                    None => format!("{v} is excluded"),
                };
                return Err(Infeasibility::new(rule, vec![v], reason));
            }
            Status::Free => {}
        }
        // Free implies N[v] is undominated, so no double domination can arise.
        self.status[v] = Status::InD;
        self.in_d.push(v);
        self.dominated_by[v] = Some(v);
        self.undominated -= 1;
        for &w in g.neighbors(v) {
            debug_assert!(self.dominated_by[w].is_none());
            self.dominated_by[w] = Some(v);
            self.undominated -= 1;
        }
        for &w in g.neighbors(v) {
            self.set_excluded(g, w);
            for &z in g.neighbors(w) {
                self.set_excluded(g, z);
            }
        }
        Ok(true)
    }

    fn exclude(&mut self, g: &BipartiteGraph, v: Vertex, rule: Rule) -> Result<bool, Infeasibility> {
        if self.status[v] == Status::InD {
            return Err(Infeasibility::new(rule, vec![v], format!("{v} is already in D")));
        }
        Ok(self.set_excluded(g, v))
    }

    /// Recomputes the bookkeeping from scratch and reports the first
    /// inconsistency.
    pub fn check_invariants(&self, g: &BipartiteGraph) -> Result<(), String> {
        let n = self.n();
        let mut count = vec![0usize; n];
        for &d in &self.in_d {
            if self.status[d] != Status::InD {
                return Err(format!("{d} listed in D but not marked"));
            }
            count[d] += 1;
            for &w in g.neighbors(d) {
                count[w] += 1;
            }
        }
        for (v, &c) in count.iter().enumerate() {
            if c > 1 {
                return Err(format!("{v} dominated {c} times"));
            }
            if (c == 1) != self.dominated_by[v].is_some() {
                return Err(format!("domination record of {v} is stale"));
            }
            if self.status[v] == Status::InD {
                for &w in g.neighbors(v) {
                    if self.status[w] != Status::Excluded {
                        return Err(format!("neighbor {w} of D-vertex {v} not excluded"));
                    }
                    for &z in g.neighbors(w) {
                        if z != v && self.status[z] != Status::Excluded {
                            return Err(format!("{z} at distance 2 from D-vertex {v} not excluded"));
                        }
                    }
                }
            }
        }
        let undominated = count.iter().filter(|&&c| c == 0).count();
        if undominated != self.undominated {
            return Err("undominated counter out of sync".into());
        }
        Ok(())
    }
}

/// Ledger with `basis` committed. Fails when two basis vertices are within
/// distance 2 of each other.
pub fn init_ledger(g: &BipartiteGraph, basis: &[Vertex]) -> Result<VertexLedger, Infeasibility> {
    let mut basis = basis.to_vec();
    basis.sort_unstable();
    basis.dedup();
    for (i, &a) in basis.iter().enumerate() {
        for &b in &basis[i + 1..] {
            if within_two(g, a, b) {
                return Err(Infeasibility::new(
                    Rule::BasisConflict,
                    vec![a, b],
                    format!("basis vertices {a} and {b} are within distance 2"),
                ));
            }
        }
    }
    let mut ledger = VertexLedger::new(g.n());
    for &v in &basis {
        ledger.commit(g, v, Rule::BasisConflict)?;
    }
    Ok(ledger)
}

/// Commits `v` to `D`.
pub fn force_vertex(g: &BipartiteGraph, ledger: &mut VertexLedger, v: Vertex) -> RuleOutcome {
    match ledger.commit(g, v, Rule::Commit) {
        Ok(true) => RuleOutcome::Progress(vec![Firing {
            rule: Rule::Commit,
            vertices: vec![v],
        }]),
        Ok(false) => RuleOutcome::NoChange,
        Err(e) => RuleOutcome::Infeasible(e),
    }
}

/// Rules out `v` as a member of `D` (a branching decision, not a rule).
pub fn exclude_vertex(g: &BipartiteGraph, ledger: &mut VertexLedger, v: Vertex) -> RuleOutcome {
    match ledger.exclude(g, v, Rule::Commit) {
        Ok(_) => RuleOutcome::NoChange,
        Err(e) => RuleOutcome::Infeasible(e),
    }
}

/// Which reductions run besides plain exact-cover propagation. Everything
/// is on by default; switching a group off only costs extra branching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleSet {
    pub lookahead: bool,
    pub subset: bool,
    pub pattern: bool,
    pub component: bool,
    pub choice: bool,
}

impl RuleSet {
    pub const ALL: RuleSet = RuleSet {
        lookahead: true,
        subset: true,
        pattern: true,
        component: true,
        choice: true,
    };
    pub const UNIT_ONLY: RuleSet = RuleSet {
        lookahead: false,
        subset: false,
        pattern: false,
        component: false,
        choice: false,
    };
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::ALL
    }
}

/// Exact-cover unit propagation over the work queue: an undominated vertex
/// without candidates is a contradiction, one with a single candidate
/// forces it, and one with two candidates excludes whatever lies within
/// distance 2 of both.
pub fn unit_propagate(g: &BipartiteGraph, ledger: &mut VertexLedger) -> RuleOutcome {
    unit_propagate_with(g, ledger, true)
}

pub fn unit_propagate_with(g: &BipartiteGraph, ledger: &mut VertexLedger, lookahead: bool) -> RuleOutcome {
    let mut firings = Vec::new();
    while let Some(t) = ledger.work_queue.pop_front() {
        ledger.queued[t] = false;
        if ledger.is_dominated(t) {
            continue;
        }
        let cands = ledger.candidates(g, t);
        match cands.as_slice() {
            [] => {
                return RuleOutcome::Infeasible(Infeasibility::new(
                    Rule::NoCandidate,
                    vec![t],
                    format!("{t} is undominated and every vertex of N[{t}] is excluded"),
                ))
            }
            [c] => {
                let c = *c;
                if let Err(e) = ledger.commit(g, c, Rule::UnitForced) {
                    return RuleOutcome::Infeasible(e);
                }
                firings.push(Firing {
                    rule: Rule::UnitForced,
                    vertices: vec![c],
                });
            }
            &[a, b] if lookahead => {
                // Anything within distance 2 of both a and b would leave t
                // without a dominator.
                for c in second_neighborhood(g, a) {
                    if ledger.status(c) == Status::Free && c != t && !g.has_edge(c, t) && within_two(g, c, b) {
                        match ledger.exclude(g, c, Rule::PairLookahead) {
                            Ok(true) => firings.push(Firing {
                                rule: Rule::PairLookahead,
                                vertices: vec![c, t],
                            }),
                            Ok(false) => {}
                            Err(e) => return RuleOutcome::Infeasible(e),
                        }
                    }
                }
            }
            _ => {}
        }
    }
    RuleOutcome::from_firings(firings)
}

/// `N²[v]`: every vertex within distance 2 of `v`, ascending.
fn second_neighborhood(g: &BipartiteGraph, v: Vertex) -> Vec<Vertex> {
    let mut out = vec![v];
    for &w in g.neighbors(v) {
        out.push(w);
        out.extend_from_slice(g.neighbors(w));
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn within_two(g: &BipartiteGraph, a: Vertex, b: Vertex) -> bool {
    a == b || g.has_edge(a, b) || g.neighbors(a).iter().any(|&w| g.has_edge(w, b))
}

/// Shape facts that hold whenever every level-2 vertex is a P5 endpoint in
/// a P8-free graph. A recorded violation means a bug or a non-P8-free input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeViolation {
    LevelBeyondFour { vertex: Vertex, level: usize },
    EdgeInsideLevelFour { u: Vertex, v: Vertex },
    LevelThreeEdgeTouchesLevelFour { edge: (Vertex, Vertex), touching: Vertex },
}

/// A nontrivial connected component of `G[N3]`.
#[derive(Clone, Debug)]
pub struct N3Component {
    pub vertices: Vec<Vertex>,
    pub black: Vec<Vertex>,
    pub white: Vec<Vertex>,
    pub edge_count: usize,
    pub contains_p4: bool,
    /// No vertex has a level-4 neighbor, and every level-2 vertex touching
    /// one side of the component is adjacent to that whole side. Under both
    /// conditions `D ∩ V(K)` is a code of `K` with at most one vertex per
    /// side.
    pub closed: bool,
}

impl N3Component {
    fn side(&self, c: Color) -> &[Vertex] {
        match c {
            Color::Black => &self.black,
            Color::White => &self.white,
        }
    }

    /// Connected, 4 vertices, 4 edges.
    pub fn is_c4(&self) -> bool {
        self.vertices.len() == 4 && self.edge_count == 4
    }

    /// Connected with 7 vertices and 6 edges is a tree; with two sides of
    /// sizes 4 and 3 and max degree 2 it is a path.
    pub fn is_exact_p7(&self, g: &BipartiteGraph, level3: &[bool]) -> bool {
        self.vertices.len() == 7
            && self.edge_count == 6
            && self
                .vertices
                .iter()
                .all(|&v| g.neighbors(v).iter().filter(|&&w| level3[w]).count() <= 2)
    }

    /// Codes of the component with at most one vertex per side: single
    /// vertices adjacent to the rest, and non-adjacent cross pairs each
    /// adjacent to the whole other side except the partner.
    pub fn codes(&self, g: &BipartiteGraph) -> Vec<Vec<Vertex>> {
        let in_k = |w: &Vertex| self.vertices.binary_search(w).is_ok();
        let deg_k = |v: Vertex| g.neighbors(v).iter().filter(|w| in_k(w)).count();
        let k = self.vertices.len();
        let mut codes: Vec<Vec<Vertex>> = self
            .vertices
            .iter()
            .filter(|&&v| deg_k(v) == k - 1)
            .map(|&v| vec![v])
            .collect();
        for &x in &self.black {
            if deg_k(x) + 1 != self.white.len() {
                continue;
            }
            for &y in &self.white {
                if !g.has_edge(x, y) && deg_k(y) + 1 == self.black.len() {
                    let mut pair = vec![x, y];
                    pair.sort_unstable();
                    codes.push(pair);
                }
            }
        }
        codes.sort();
        codes
    }
}

/// Distance levels of a basis together with the structural facts the rules
/// consult. Everything here depends on the graph and the basis only.
#[derive(Clone, Debug)]
pub struct LevelContext {
    levels: DistanceLevels,
    p8_free: bool,
    endpoint_len: Vec<usize>,
    components: Vec<N3Component>,
    component_of: Vec<Option<usize>>,
    touches: Vec<Vec<usize>>,
    shape_violations: Vec<ShapeViolation>,
    all_p5: bool,
}

/// Longest induced path considered from a level-2 vertex into levels 0-1.
const ENDPOINT_CAP: usize = 7;

impl LevelContext {
    /// `p8_free` is the caller's promise that `g` has no induced P8; rules
    /// that need it stay silent otherwise.
    pub fn new(g: &BipartiteGraph, basis: &[Vertex], p8_free: bool) -> Result<Self, GraphError> {
        let levels = g.bfs_levels(basis)?;
        Ok(Self::from_levels(g, levels, p8_free))
    }

    pub fn from_levels(g: &BipartiteGraph, levels: DistanceLevels, p8_free: bool) -> Self {
        let n = g.n();
        let lvl = |v: Vertex| levels.level(v);

        let mut low: Vec<Vertex> = levels.at(0).to_vec();
        low.extend_from_slice(levels.at(1));
        let mask = region_mask(n, &low);
        let mut search = PathSearcher::new(g);
        let mut endpoint_len = vec![0; n];
        for &u in levels.at(2) {
            endpoint_len[u] = search.longest_from(u, Some(&mask), ENDPOINT_CAP);
        }
        let all_p5 = levels.at(2).iter().all(|&u| endpoint_len[u] >= 5);

        let mut shape_violations = Vec::new();
        for (i, layer) in levels.levels().iter().enumerate().skip(5) {
            for &v in layer {
                shape_violations.push(ShapeViolation::LevelBeyondFour { vertex: v, level: i });
            }
        }
        for &u in levels.at(4) {
            for &v in g.neighbors(u) {
                if u < v && lvl(v) == Some(4) {
                    shape_violations.push(ShapeViolation::EdgeInsideLevelFour { u, v });
                }
            }
        }
        for &u in levels.at(3) {
            let Some(&mate) = g.neighbors(u).iter().find(|&&w| lvl(w) == Some(3)) else {
                continue;
            };
            if let Some(&w) = g.neighbors(u).iter().find(|&&w| lvl(w) == Some(4)) {
                shape_violations.push(ShapeViolation::LevelThreeEdgeTouchesLevelFour {
                    edge: (u.min(mate), u.max(mate)),
                    touching: w,
                });
            }
        }

        let level3: Vec<bool> = (0..n).map(|v| lvl(v) == Some(3)).collect();
        let mut component_of = vec![None; n];
        let mut components = Vec::new();
        for &s in levels.at(3) {
            if component_of[s].is_some() || !g.neighbors(s).iter().any(|&w| level3[w]) {
                continue;
            }
            let idx = components.len();
            let mut vertices = vec![s];
            component_of[s] = Some(idx);
            let mut head = 0;
            while head < vertices.len() {
                let v = vertices[head];
                head += 1;
                for &w in g.neighbors(v) {
                    if level3[w] && component_of[w].is_none() {
                        component_of[w] = Some(idx);
                        vertices.push(w);
                    }
                }
            }
            vertices.sort_unstable();
            let (black, white): (Vec<Vertex>, Vec<Vertex>) =
                vertices.iter().partition(|&&v| g.color(v) == Color::Black);
            let edge_count = black
                .iter()
                .map(|&x| g.neighbors(x).iter().filter(|&&w| level3[w]).count())
                .sum::<usize>();
            // Connected bipartite graphs without an induced P4 are complete bipartite.
            let contains_p4 = edge_count != black.len() * white.len();
            components.push(N3Component {
                vertices,
                black,
                white,
                edge_count,
                contains_p4,
                closed: false,
            });
        }

        let mut touches = vec![Vec::new(); n];
        for &u in levels.at(2) {
            let mut t: Vec<usize> = g.neighbors(u).iter().filter_map(|&w| component_of[w]).collect();
            t.sort_unstable();
            t.dedup();
            touches[u] = t;
        }
        for (idx, comp) in components.iter_mut().enumerate() {
            let isolated = comp
                .vertices
                .iter()
                .all(|&v| g.neighbors(v).iter().all(|&w| lvl(w) != Some(4)));
            let joined = levels.at(2).iter().all(|&u| {
                if touches[u].binary_search(&idx).is_err() {
                    return true;
                }
                let side = comp.side(g.color(u).opposite());
                g.is_join(u, side)
            });
            comp.closed = isolated && joined;
        }

        LevelContext {
            levels,
            p8_free,
            endpoint_len,
            components,
            component_of,
            touches,
            shape_violations,
            all_p5,
        }
    }

    pub fn levels(&self) -> &DistanceLevels {
        &self.levels
    }

    pub fn p8_free(&self) -> bool {
        self.p8_free
    }

    /// Vertex count of the longest induced path that starts at the level-2
    /// vertex `u` and continues inside levels 0-1 (capped at 7).
    pub fn endpoint_length(&self, u: Vertex) -> usize {
        self.endpoint_len[u]
    }

    pub fn is_p5_endpoint(&self, u: Vertex) -> bool {
        self.endpoint_len[u] >= 5
    }

    /// Every level-2 vertex is a P5 endpoint into levels 0-1.
    pub fn all_p5_endpoints(&self) -> bool {
        self.all_p5
    }

    /// Violations of the level-shape facts. Only meaningful as a defect
    /// signal when [`Self::all_p5_endpoints`] holds on a P8-free graph.
    pub fn shape_violations(&self) -> &[ShapeViolation] {
        &self.shape_violations
    }

    /// P8-free, every level-2 vertex a P5 endpoint, and the shape facts
    /// verified. The choice rule's strict form depends on this.
    pub fn hypothesis(&self) -> bool {
        self.p8_free && self.all_p5 && self.shape_violations.is_empty()
    }

    pub fn n3_components(&self) -> &[N3Component] {
        &self.components
    }

    pub fn component_of(&self, v: Vertex) -> Option<usize> {
        self.component_of[v]
    }

    fn level(&self, v: Vertex) -> Option<usize> {
        self.levels.level(v)
    }

    fn far(&self, g: &BipartiteGraph, v: Vertex) -> Vec<Vertex> {
        g.neighbors(v)
            .iter()
            .copied()
            .filter(|&w| self.level(w).is_some_and(|l| l >= 3))
            .collect()
    }
}

fn is_sub(a: &[Vertex], b: &[Vertex]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Nested far neighborhoods inside levels 3 and 4.
///
/// `far(v)` is the part of `N(v)` at level 3 or deeper. Level-2 vertices are
/// excluded by the basis, so an undominated vertex `v1` at level 3 or 4 can
/// only be dominated by itself or by `far(v1)`. If `far(v1) ⊆ far(v2)` for
/// some other `v2`, then `v2 ∈ D` leaves `v1` without a dominator.
pub fn subset_exclusion(g: &BipartiteGraph, ledger: &mut VertexLedger, ctx: &LevelContext) -> RuleOutcome {
    let n = g.n();
    let mid: Vec<Vertex> = ctx
        .levels
        .at(3)
        .iter()
        .chain(ctx.levels.at(4))
        .copied()
        .filter(|&v| !ledger.is_dominated(v))
        .collect();
    let far: Vec<Vec<Vertex>> = (0..n)
        .map(|v| {
            if ctx.level(v).is_some_and(|l| l >= 3) {
                ctx.far(g, v)
            } else {
                Vec::new()
            }
        })
        .collect();
    let far_of = |v: Vertex| -> &[Vertex] { &far[v] };
    let dominated: Vec<bool> = (0..n).map(|v| ledger.is_dominated(v)).collect();
    let open = |v: Vertex| !dominated[v];

    // Chains and twins first: they yield forcings or contradictions that the
    // plain exclusion would only reach through later unit propagation.
    for &v1 in &mid {
        let f1 = far_of(v1);
        if f1.len() != 1 {
            continue;
        }
        let w1 = f1[0];
        if !open(w1) {
            continue;
        }
        let fw1 = far_of(w1);
        let others: Vec<Vertex> = fw1.iter().copied().filter(|&v| v != v1).collect();
        let mid_open = |v: Vertex| open(v) && matches!(ctx.level(v), Some(3) | Some(4));
        if fw1.len() == 3 && others.iter().all(|&v| mid_open(v)) {
            for (v2, v3) in [(others[0], others[1]), (others[1], others[0])] {
                let f2 = far_of(v2);
                let f3 = far_of(v3);
                if f2.len() != 2 || f3.len() != 3 || !f2.contains(&w1) || !is_sub(f2, f3) {
                    continue;
                }
                let w2 = f2.iter().copied().find(|&w| w != w1).unwrap();
                let Some(w3) = f3.iter().copied().find(|w| !f2.contains(w)) else {
                    continue;
                };
                if !open(w2) || !open(w3) {
                    continue;
                }
                let mut v23 = vec![v2, v3];
                v23.sort_unstable();
                if far_of(w2) == v23.as_slice() && far_of(w3) == [v3] {
                    return RuleOutcome::Infeasible(Infeasibility::new(
                        Rule::ChainConflict,
                        vec![v1, v2, v3, w1, w2, w3],
                        format!("{v2} and {w2} have no possible dominator"),
                    ));
                }
            }
        }
        if fw1.len() == 2 && mid_open(others[0]) {
            let v2 = others[0];
            let f2 = far_of(v2);
            if f2.len() == 2 && f2.contains(&w1) {
                let w2 = f2.iter().copied().find(|&w| w != w1).unwrap();
                if open(w2) && far_of(w2) == [v2] {
                    let mut fired = Vec::new();
                    for v in [v1, w2] {
                        match ledger.commit(g, v, Rule::ChainForced) {
                            Ok(true) => fired.push(v),
                            Ok(false) => {}
                            Err(e) => return RuleOutcome::Infeasible(e),
                        }
                    }
                    if !fired.is_empty() {
                        return RuleOutcome::Progress(vec![Firing {
                            rule: Rule::ChainForced,
                            vertices: fired,
                        }]);
                    }
                }
            }
        }
    }

    for (i, &v1) in mid.iter().enumerate() {
        let f1 = far_of(v1);
        if f1.is_empty() {
            continue;
        }
        for &v2 in &mid[i + 1..] {
            if far_of(v2) != f1 {
                continue;
            }
            if f1.len() == 1 {
                let w = f1[0];
                return match ledger.commit(g, w, Rule::TwinForced) {
                    Ok(true) => RuleOutcome::Progress(vec![Firing {
                        rule: Rule::TwinForced,
                        vertices: vec![w],
                    }]),
                    Ok(false) => continue,
                    Err(e) => RuleOutcome::Infeasible(e),
                };
            }
            let mut pair = vec![v1, v2];
            pair.sort_unstable();
            let private: Vec<Vertex> = f1
                .iter()
                .copied()
                .filter(|&w| open(w) && far_of(w) == pair.as_slice())
                .collect();
            if private.len() >= 2 {
                return RuleOutcome::Infeasible(Infeasibility::new(
                    Rule::TwinConflict,
                    vec![v1, v2, private[0], private[1]],
                    format!("{} and {} can only dominate themselves", private[0], private[1]),
                ));
            }
        }
    }

    let mut firings = Vec::new();
    for &v1 in &mid {
        let f1 = far_of(v1);
        let Some(&w) = f1.first() else { continue };
        for &v2 in g.neighbors(w) {
            if v2 == v1 || ledger.status(v2) != Status::Free || !matches!(ctx.level(v2), Some(3) | Some(4)) {
                continue;
            }
            if f1.iter().all(|&x| g.has_edge(v2, x)) {
                match ledger.exclude(g, v2, Rule::SubsetExclusion) {
                    Ok(true) => firings.push(Firing {
                        rule: Rule::SubsetExclusion,
                        vertices: vec![v2, v1],
                    }),
                    Ok(false) => {}
                    Err(e) => return RuleOutcome::Infeasible(e),
                }
            }
        }
    }
    RuleOutcome::from_firings(firings)
}

/// Induced-path and component-pattern contradictions.
///
/// The endpoint rules need a P8-free graph. The component rules only look
/// at closed level-3 components (see [`N3Component::closed`]), where every
/// touching level-2 vertex is dominated by the component's D-vertex on its
/// side.
pub fn pattern_rules(g: &BipartiteGraph, ledger: &mut VertexLedger, ctx: &LevelContext) -> RuleOutcome {
    let mut firings = Vec::new();
    if ctx.p8_free {
        for &u in ctx.levels.at(2) {
            let len = ctx.endpoint_length(u);
            if len >= 7 {
                return RuleOutcome::Infeasible(Infeasibility::new(
                    Rule::EndpointP7,
                    vec![u],
                    format!("{u} ends an induced P7 through levels 0-1, so it has no level-3 neighbor"),
                ));
            }
            if len != 6 {
                continue;
            }
            let up: Vec<Vertex> = g.neighbors(u).iter().copied().filter(|&w| ctx.level(w) == Some(3)).collect();
            if up.len() != 1 {
                return RuleOutcome::Infeasible(Infeasibility::new(
                    Rule::EndpointP6,
                    std::iter::once(u).chain(up.iter().copied()).collect(),
                    format!("{u} ends an induced P6 and has {} level-3 neighbors", up.len()),
                ));
            }
            let v = up[0];
            if let Some(&w) = g.neighbors(v).iter().find(|&&w| ctx.level(w).is_some_and(|l| l >= 3)) {
                return RuleOutcome::Infeasible(Infeasibility::new(
                    Rule::EndpointP6,
                    vec![u, v, w],
                    format!("{u}-{v}-{w} extends an induced P6 to a P8"),
                ));
            }
            match ledger.commit(g, v, Rule::EndpointP6) {
                Ok(true) => firings.push(Firing {
                    rule: Rule::EndpointP6,
                    vertices: vec![v],
                }),
                Ok(false) => {}
                Err(e) => return RuleOutcome::Infeasible(e),
            }
        }
        if !firings.is_empty() {
            return RuleOutcome::Progress(firings);
        }
    }

    let level3: Vec<bool> = (0..g.n()).map(|v| ctx.level(v) == Some(3)).collect();
    for comp in ctx.components.iter().filter(|c| c.closed) {
        if comp.is_c4() || comp.is_exact_p7(g, &level3) {
            return RuleOutcome::Infeasible(Infeasibility::new(
                Rule::ComponentShape,
                comp.vertices.clone(),
                if comp.is_c4() {
                    "closed level-3 component is a C4"
                } else {
                    "closed level-3 component is exactly a P7"
                },
            ));
        }
    }

    let closed = |k: usize| ctx.components[k].closed;
    let p4 = |k: usize| ctx.components[k].contains_p4;
    let n2 = ctx.levels.at(2);

    for &u in n2 {
        let heavy: Vec<usize> = ctx.touches[u].iter().copied().filter(|&k| closed(k) && p4(k)).collect();
        if heavy.len() >= 2 {
            let mut witness = vec![u];
            witness.extend(heavy.iter().map(|&k| ctx.components[k].vertices[0]));
            return RuleOutcome::Infeasible(Infeasibility::new(
                Rule::SharedP4Neighbor,
                witness,
                format!("{u} touches two closed components containing a P4"),
            ));
        }
    }

    // Each closed component touched by both `c` and a partner `b` of the
    // other color has its D-vertex on c's side (dominating c) or on b's side
    // (dominating b). P4-containing components have one on each side.
    let shared = |a: Vertex, b: Vertex| -> Vec<usize> {
        ctx.touches[a]
            .iter()
            .copied()
            .filter(|&k| closed(k) && ctx.touches[b].binary_search(&k).is_ok())
            .collect()
    };
    for &c in n2 {
        if ctx.touches[c].iter().filter(|&&k| closed(k)).count() < 2 {
            continue;
        }
        let partners: Vec<(Vertex, Vec<usize>)> = n2
            .iter()
            .copied()
            .filter(|&b| g.color(b) != g.color(c))
            .map(|b| (b, shared(c, b)))
            .filter(|(_, s)| !s.is_empty())
            .collect();
        for (i, (b1, a)) in partners.iter().enumerate() {
            if min_dominators(a, &[], &p4) >= 2 {
                return RuleOutcome::Infeasible(Infeasibility::new(
                    Rule::ComponentPair,
                    vec![c, *b1],
                    format!("{c} and {b1} share {} closed components", a.len()),
                ));
            }
            for (b2, b) in &partners[i + 1..] {
                if min_dominators(a, b, &p4) >= 2 {
                    return RuleOutcome::Infeasible(Infeasibility::new(
                        Rule::ComponentPair,
                        vec![c, *b1, *b2],
                        format!("{c} would be dominated twice through components shared with {b1} and {b2}"),
                    ));
                }
            }
        }
    }

    for &u in n2 {
        let Some(k) = ctx.touches[u].iter().copied().find(|&k| closed(k) && p4(k)) else {
            continue;
        };
        for &w in g.neighbors(u) {
            if ctx.level(w) == Some(3) && ctx.component_of(w) != Some(k) && ledger.status(w) == Status::Free {
                match ledger.exclude(g, w, Rule::P4NeighborExclusion) {
                    Ok(true) => firings.push(Firing {
                        rule: Rule::P4NeighborExclusion,
                        vertices: vec![w, u],
                    }),
                    Ok(false) => {}
                    Err(e) => return RuleOutcome::Infeasible(e),
                }
            }
        }
    }
    RuleOutcome::from_firings(firings)
}

/// Lower bound on how many of the components in `a ∪ b` dominate the
/// common vertex `c`. At most one component of `a` (resp. `b`) may instead
/// dominate its partner, and only if it has no P4.
fn min_dominators(a: &[usize], b: &[usize], p4: &dyn Fn(usize) -> bool) -> usize {
    let mut all: Vec<usize> = a.iter().chain(b).copied().collect();
    all.sort_unstable();
    all.dedup();
    let free_a: Vec<usize> = a.iter().copied().filter(|&k| !p4(k)).collect();
    let free_b: Vec<usize> = b.iter().copied().filter(|&k| !p4(k)).collect();
    let two = free_a
        .iter()
        .any(|&x| !b.contains(&x) && free_b.iter().any(|&y| y != x && !a.contains(&y)));
    let avoid = if two {
        2
    } else if !free_a.is_empty() || !free_b.is_empty() {
        1
    } else {
        0
    };
    all.len().saturating_sub(avoid)
}

/// Restricts every closed level-3 component to its admissible codes: a
/// single vertex adjacent to the rest of the component, or a non-adjacent
/// cross pair covering the opposite sides. Vertices in no admissible code
/// are excluded, vertices in all of them are forced.
pub fn n3_component_reduction(g: &BipartiteGraph, ledger: &mut VertexLedger, ctx: &LevelContext) -> RuleOutcome {
    let mut firings = Vec::new();
    for comp in ctx.components.iter().filter(|c| c.closed) {
        if comp.vertices.iter().all(|&v| ledger.status(v) != Status::Free) {
            continue;
        }
        let committed: Vec<Vertex> = comp
            .vertices
            .iter()
            .copied()
            .filter(|&v| ledger.status(v) == Status::InD)
            .collect();
        let codes: Vec<Vec<Vertex>> = comp
            .codes(g)
            .into_iter()
            .filter(|code| {
                code.iter().all(|&v| ledger.status(v) != Status::Excluded)
                    && committed.iter().all(|v| code.contains(v))
            })
            .collect();
        if codes.is_empty() {
            return RuleOutcome::Infeasible(Infeasibility::new(
                Rule::ComponentCode,
                comp.vertices.clone(),
                "closed level-3 component has no admissible code",
            ));
        }
        for &v in &comp.vertices {
            if ledger.status(v) != Status::Free {
                continue;
            }
            let hits = codes.iter().filter(|c| c.contains(&v)).count();
            let result = if hits == 0 {
                ledger.exclude(g, v, Rule::ComponentCode)
            } else if hits == codes.len() {
                ledger.commit(g, v, Rule::ComponentCode)
            } else {
                Ok(false)
            };
            match result {
                Ok(true) => firings.push(Firing {
                    rule: Rule::ComponentCode,
                    vertices: vec![v],
                }),
                Ok(false) => {}
                Err(e) => return RuleOutcome::Infeasible(e),
            }
        }
        if !firings.is_empty() {
            return RuleOutcome::Progress(firings);
        }
    }
    RuleOutcome::NoChange
}

/// Commits `v1` as the D-neighbor of the level-2 vertex `u`, then settles
/// every other level-3 neighbor `vi` of `u`: it can only be dominated from
/// `N(vi) ∩ (N3 ∪ N4) \ N(v1)`. An empty set is a contradiction and a
/// single vertex is forced. Two or more are a contradiction only under the
/// level hypothesis, reported as a separate rule.
pub fn choice_propagation(
    g: &BipartiteGraph,
    ledger: &mut VertexLedger,
    ctx: &LevelContext,
    u: Vertex,
    v1: Vertex,
) -> RuleOutcome {
    debug_assert!(ctx.level(u) == Some(2) && ctx.level(v1) == Some(3) && g.has_edge(u, v1));
    let mut firings = Vec::new();
    match ledger.commit(g, v1, Rule::Choice) {
        Ok(true) => firings.push(Firing {
            rule: Rule::Commit,
            vertices: vec![v1],
        }),
        Ok(false) => {}
        Err(e) => return RuleOutcome::Infeasible(e),
    }
    for &vi in g.neighbors(u) {
        if vi == v1 || ctx.level(vi) != Some(3) {
            continue;
        }
        let outside: Vec<Vertex> = g
            .neighbors(vi)
            .iter()
            .copied()
            .filter(|&w| matches!(ctx.level(w), Some(3) | Some(4)) && !g.has_edge(w, v1))
            .collect();
        match outside.as_slice() {
            [] => {
                return RuleOutcome::Infeasible(Infeasibility::new(
                    Rule::Choice,
                    vec![u, v1, vi],
                    format!("with {v1} in D, {vi} has no possible dominator"),
                ))
            }
            [w] => match ledger.commit(g, *w, Rule::Choice) {
                Ok(true) => firings.push(Firing {
                    rule: Rule::Choice,
                    vertices: vec![*w],
                }),
                Ok(false) => {}
                Err(e) => return RuleOutcome::Infeasible(e),
            },
            _ if ctx.hypothesis() => {
                return RuleOutcome::Infeasible(Infeasibility::new(
                    Rule::ChoiceViolation,
                    vec![u, v1, vi],
                    format!("with {v1} in D, {vi} keeps {} far candidates", outside.len()),
                ))
            }
            _ => {}
        }
    }
    RuleOutcome::from_firings(firings)
}

/// How [`reduce_fixpoint`] treats the level context when `D` grows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Leveling {
    /// Rebuild the levels from the full committed set after every growth.
    Relevel,
    /// Keep the given levels; the committed set may outgrow their basis.
    Frozen,
}

/// Runs unit → subset → pattern → component until nothing fires, restarting
/// from the unit rule after every change.
pub fn reduce_fixpoint(
    g: &BipartiteGraph,
    ledger: &mut VertexLedger,
    ctx: &mut LevelContext,
    leveling: Leveling,
) -> RuleOutcome {
    reduce_fixpoint_with(g, ledger, ctx, leveling, RuleSet::ALL)
}

/// [`reduce_fixpoint`] restricted to the groups enabled in `rules`.
pub fn reduce_fixpoint_with(
    g: &BipartiteGraph,
    ledger: &mut VertexLedger,
    ctx: &mut LevelContext,
    leveling: Leveling,
    rules: RuleSet,
) -> RuleOutcome {
    type Reduction = fn(&BipartiteGraph, &mut VertexLedger, &LevelContext) -> RuleOutcome;
    let enabled: Vec<Reduction> = [
        (rules.subset, subset_exclusion as Reduction),
        (rules.pattern, pattern_rules),
        (rules.component, n3_component_reduction),
    ]
    .into_iter()
    .filter_map(|(on, f)| on.then_some(f))
    .collect();
    let mut firings = Vec::new();
    loop {
        match unit_propagate_with(g, ledger, rules.lookahead) {
            RuleOutcome::Infeasible(e) => return RuleOutcome::Infeasible(e),
            RuleOutcome::Progress(f) => firings.extend(f),
            RuleOutcome::NoChange => {}
        }
        if ledger.is_complete() {
            break;
        }
        if leveling == Leveling::Relevel && ledger.in_d().len() != ctx.levels.basis().len() {
            *ctx = LevelContext::new(g, ledger.in_d(), ctx.p8_free).expect("committed set is a valid basis");
        }
        let mut progressed = false;
        for rule in &enabled {
            match rule(g, ledger, ctx) {
                RuleOutcome::Infeasible(e) => return RuleOutcome::Infeasible(e),
                RuleOutcome::Progress(f) => {
                    firings.extend(f);
                    progressed = true;
                    break;
                }
                RuleOutcome::NoChange => {}
            }
        }
        if !progressed && ledger.pending() == 0 {
            break;
        }
    }
    debug_assert_eq!(ledger.check_invariants(g), Ok(()));
    RuleOutcome::from_firings(firings)
}
