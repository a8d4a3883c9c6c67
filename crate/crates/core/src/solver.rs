//! The decision procedure.
//!
//! Per connected component: try the one-sided certificates, then every
//! useful distance-3 seed pair as an initial basis. A basis is reduced to a
//! fixpoint; if every level-2 vertex is then a P5 endpoint the levelled
//! search takes over, otherwise the basis is extended by branching on the
//! candidates of chosen undominated vertices and re-levelled.
//!
//! Every branching point enumerates the full candidate set of some
//! undominated vertex (or splits on `v ∈ D` / `v ∉ D`), and every rule is
//! sound, so the search is exact. The final certificate is re-verified.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{BipartiteGraph, Color, DistanceLevels, Vertex};
use crate::oracle::{verify_certificate, EdsCertificate};
use crate::pattern::PathSearcher;
use crate::reduce::{
    choice_propagation, exclude_vertex, force_vertex, init_ledger, reduce_fixpoint_with, unit_propagate_with,
    LevelContext, Leveling, Rule, RuleOutcome, RuleSet, Status, VertexLedger,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("graph contains an induced P8: {path:?}")]
    NotP8Free { path: Vec<Vertex> },
    #[error("branch budget of {budget} exhausted")]
    BudgetExceeded { budget: u64 },
    #[error("internal anomaly: {0}")]
    Anomaly(String),
}

/// Counters that never drive the search but flag defects or non-P8-free
/// inputs when nonzero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Deepest distance level seen over all bases.
    pub max_level: usize,
    /// Bases with a vertex at level 7 or deeper.
    pub deep_levels: u64,
    /// Bases where every level-2 vertex was a P5 endpoint.
    pub hypothesis_bases: u64,
    /// Of those, bases whose level shape was nonetheless wrong.
    pub shape_violations: u64,
    /// Choice-rule contradictions with two or more far candidates.
    pub choice_violations: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub seeds_tried: u64,
    pub basis_extensions: u64,
    pub branches: u64,
    pub rules_fired: BTreeMap<String, u64>,
    #[serde(serialize_with = "seconds", deserialize_with = "from_seconds")]
    pub wall_time: Duration,
    pub diagnostics: Diagnostics,
}

fn seconds<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

fn from_seconds<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
    let secs = f64::deserialize(d)?;
    Ok(Duration::from_secs_f64(secs.max(0.0)))
}

impl SolveTrace {
    fn merge(&mut self, other: &SolveTrace) {
        self.seeds_tried += other.seeds_tried;
        self.basis_extensions += other.basis_extensions;
        self.branches += other.branches;
        for (k, v) in &other.rules_fired {
            *self.rules_fired.entry(k.clone()).or_default() += v;
        }
        let d = &mut self.diagnostics;
        let o = &other.diagnostics;
        d.max_level = d.max_level.max(o.max_level);
        d.deep_levels += o.deep_levels;
        d.hypothesis_bases += o.hypothesis_bases;
        d.shape_violations += o.shape_violations;
        d.choice_violations += o.choice_violations;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "eds", rename_all = "snake_case")]
pub enum Outcome {
    Found(EdsCertificate),
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub outcome: Outcome,
    pub trace: SolveTrace,
}

impl SolveResult {
    pub fn certificate(&self) -> Option<&EdsCertificate> {
        match &self.outcome {
            Outcome::Found(c) => Some(c),
            Outcome::None => None,
        }
    }

    pub fn has_eds(&self) -> bool {
        matches!(self.outcome, Outcome::Found(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// Branch limit; `None` means [`default_budget`].
    pub budget: Option<u64>,
    /// Verify P8-freeness first. When off, the caller vouches for it.
    pub check_p8: bool,
    pub rules: RuleSet,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            budget: None,
            check_p8: true,
            rules: RuleSet::ALL,
        }
    }
}

/// `10·n⁴`, saturating.
pub fn default_budget(n: usize) -> u64 {
    (n as u64).saturating_pow(4).saturating_mul(10).max(10)
}

/// Decides `g` with the default options and the given branch budget.
pub fn solve(g: &BipartiteGraph, budget: u64) -> Result<SolveResult, SolveError> {
    solve_with(
        g,
        &SolveOptions {
            budget: Some(budget),
            ..SolveOptions::default()
        },
    )
}

pub fn solve_with(g: &BipartiteGraph, options: &SolveOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    if options.check_p8 {
        if let Some(path) = find_induced_path(g, 8) {
            return Err(SolveError::NotP8Free { path });
        }
    }
    let budget = options.budget.unwrap_or_else(|| default_budget(g.n()));
    let mut trace = SolveTrace::default();
    let mut members = Vec::new();
    let mut found = true;
    for block in g.components() {
        let (gc, map) = g.induced_subgraph(&block);
        let mut solver = Solver::new(&gc, budget.saturating_sub(trace.branches), true).with_rules(options.rules);
        let result = solver.solve_component();
        trace.merge(solver.trace());
        match result? {
            Some(cert) => members.extend(cert.members().iter().map(|&v| map[v])),
            None => {
                found = false;
                break;
            }
        }
    }
    trace.wall_time = start.elapsed();
    let outcome = if found {
        let cert = EdsCertificate::new(members);
        if !verify_certificate(g, cert.members()).is_valid() {
            return Err(SolveError::Anomaly(format!("assembled certificate {cert} failed verification")));
        }
        Outcome::Found(cert)
    } else {
        Outcome::None
    };
    Ok(SolveResult { outcome, trace })
}

/// Lexicographically first induced path on `k` vertices, if any.
pub fn find_induced_path(g: &BipartiteGraph, k: usize) -> Option<Vec<Vertex>> {
    let mut search = PathSearcher::new(g);
    (0..g.n()).find_map(|v| search.first_from(v, k, None).map(|p| p.vertices().to_vec()))
}

/// The certificates with at most one vertex on one side: for every `x`,
/// `{x} ∪ (other side \ N(x))`. Black candidates first, ascending.
pub fn try_onesided(gc: &BipartiteGraph) -> Option<EdsCertificate> {
    for side in [Color::Black, Color::White] {
        for x in gc.vertices_of_color(side) {
            let mut d: Vec<Vertex> = gc
                .vertices_of_color(side.opposite())
                .filter(|&y| !gc.has_edge(x, y))
                .collect();
            d.push(x);
            if verify_certificate(gc, &d).is_valid() {
                return Some(EdsCertificate::new(d));
            }
        }
    }
    None
}

/// All (black, white) pairs at distance exactly 3, ascending.
pub fn enumerate_seeds(gc: &BipartiteGraph) -> Vec<(Vertex, Vertex)> {
    let mut seeds = Vec::new();
    for x in gc.vertices_of_color(Color::Black) {
        let dist = gc.distances_from(x);
        for y in gc.vertices_of_color(Color::White) {
            if dist[y] == Some(3) {
                seeds.push((x, y));
            }
        }
    }
    seeds
}

/// The seeds that can matter: some D-vertex lies in `N[v0]` for a
/// minimum-degree vertex `v0`, and in a connected graph whose e.d.s. has
/// both colors, every D-vertex has a D-vertex of the other color at
/// distance exactly 3. So it suffices to keep pairs with an endpoint in
/// `N[v0]`.
pub fn useful_seeds(gc: &BipartiteGraph) -> Vec<(Vertex, Vertex)> {
    let Some(v0) = (0..gc.n()).min_by_key(|&v| (gc.degree(v), v)) else {
        return Vec::new();
    };
    let near = |v: Vertex| v == v0 || gc.has_edge(v, v0);
    enumerate_seeds(gc)
        .into_iter()
        .filter(|&(x, y)| near(x) || near(y))
        .collect()
}

/// For each level-2 vertex, whether it ends an induced P5 whose other
/// vertices lie in levels 0-1.
pub fn p5_endpoint_property(gc: &BipartiteGraph, levels: &DistanceLevels) -> Vec<(Vertex, bool)> {
    let ctx = LevelContext::from_levels(gc, levels.clone(), false);
    levels.at(2).iter().map(|&u| (u, ctx.is_p5_endpoint(u))).collect()
}

/// Picks the undominated vertex whose candidates the next branching
/// enumerates.
#[derive(Clone, Copy, Debug)]
enum Pick {
    /// Least undominated level-2 vertex of a color.
    Level2Color(Color),
    /// Least undominated level-2 vertex.
    Level2,
    /// Least undominated vertex at level 5 or deeper.
    Deep,
    /// Least undominated, already excluded level-3 vertex, provided some
    /// level-2 vertex is still undominated.
    ExcludedLevel3,
}

/// Search state for one connected component.
pub struct Solver<'g> {
    g: &'g BipartiteGraph,
    p8_free: bool,
    budget: u64,
    rules: RuleSet,
    trace: SolveTrace,
}

impl<'g> Solver<'g> {
    /// `p8_free` is the caller's promise; rules that depend on it are off
    /// otherwise.
    pub fn new(g: &'g BipartiteGraph, budget: u64, p8_free: bool) -> Self {
        Solver {
            g,
            p8_free,
            budget,
            rules: RuleSet::ALL,
            trace: SolveTrace::default(),
        }
    }

    pub fn with_rules(mut self, rules: RuleSet) -> Self {
        self.rules = rules;
        self
    }

    pub fn trace(&self) -> &SolveTrace {
        &self.trace
    }

    pub fn into_trace(self) -> SolveTrace {
        self.trace
    }

    /// Exact decision on a connected graph.
    pub fn solve_component(&mut self) -> Result<Option<EdsCertificate>, SolveError> {
        let g = self.g;
        if g.n() == 0 {
            return Ok(Some(EdsCertificate::new(Vec::new())));
        }
        if let Some(cert) = try_onesided(g) {
            return Ok(Some(cert));
        }
        for (x, y) in useful_seeds(g) {
            self.trace.seeds_tried += 1;
            let ledger = match init_ledger(g, &[x, y]) {
                Ok(l) => l,
                Err(_) => continue,
            };
            if let Some(cert) = self.solve_with_basis(ledger)? {
                return Ok(Some(cert));
            }
        }
        Ok(None)
    }

    fn branch(&mut self) -> Result<(), SolveError> {
        self.trace.branches += 1;
        if self.trace.branches > self.budget {
            return Err(SolveError::BudgetExceeded { budget: self.budget });
        }
        Ok(())
    }

    fn record(&mut self, outcome: &RuleOutcome) {
        match outcome {
            RuleOutcome::Progress(firings) => {
                for f in firings {
                    *self.trace.rules_fired.entry(f.rule.name().to_string()).or_default() += 1;
                }
            }
            RuleOutcome::Infeasible(e) => {
                *self.trace.rules_fired.entry(e.rule.name().to_string()).or_default() += 1;
                if e.rule == Rule::ChoiceViolation {
                    self.trace.diagnostics.choice_violations += 1;
                }
            }
            RuleOutcome::NoChange => {}
        }
    }

    fn note_levels(&mut self, ctx: &LevelContext) {
        let d = &mut self.trace.diagnostics;
        let deepest = ctx.levels().max_level();
        d.max_level = d.max_level.max(deepest);
        if deepest >= 7 {
            d.deep_levels += 1;
        }
        if self.p8_free && ctx.all_p5_endpoints() {
            d.hypothesis_bases += 1;
            if !ctx.shape_violations().is_empty() {
                d.shape_violations += 1;
            }
        }
    }

    fn finish(&self, ledger: &VertexLedger) -> Result<Option<EdsCertificate>, SolveError> {
        let cert = EdsCertificate::new(ledger.in_d_sorted());
        if !verify_certificate(self.g, cert.members()).is_valid() {
            return Err(SolveError::Anomaly(format!("complete ledger {cert} is not an e.d.s.")));
        }
        Ok(Some(cert))
    }

    /// Reduce, then either finish, hand over to the levelled search, or
    /// extend the basis by branching and recurse on each extension.
    pub fn solve_with_basis(&mut self, mut ledger: VertexLedger) -> Result<Option<EdsCertificate>, SolveError> {
        let g = self.g;
        if ledger.in_d().is_empty() {
            return Err(SolveError::Anomaly("solve_with_basis needs a nonempty basis".into()));
        }
        let mut ctx = LevelContext::new(g, ledger.in_d(), self.p8_free).expect("nonempty basis");
        let out = reduce_fixpoint_with(g, &mut ledger, &mut ctx, Leveling::Relevel, self.rules);
        self.record(&out);
        if out.is_infeasible() {
            return Ok(None);
        }
        if ledger.is_complete() {
            return self.finish(&ledger);
        }
        if ctx.levels().basis().len() != ledger.in_d().len() {
            ctx = LevelContext::new(g, ledger.in_d(), self.p8_free).expect("nonempty basis");
        }
        self.note_levels(&ctx);
        if ctx.hypothesis() {
            return self.solve_levelled(ctx, ledger);
        }

        let open2: Vec<Vertex> = ctx
            .levels()
            .at(2)
            .iter()
            .copied()
            .filter(|&u| !ledger.is_dominated(u))
            .collect();
        let has_color = |c: Color| open2.iter().any(|&u| g.color(u) == c);
        let deep_open = ctx
            .levels()
            .levels()
            .iter()
            .skip(5)
            .flatten()
            .any(|&v| !ledger.is_dominated(v));
        let plan: Vec<Pick> = if has_color(Color::Black) && has_color(Color::White) {
            vec![Pick::Level2Color(Color::Black), Pick::Level2Color(Color::White)]
        } else if deep_open {
            vec![Pick::Deep, Pick::Level2]
        } else if !open2.is_empty() {
            vec![Pick::Level2, Pick::ExcludedLevel3, Pick::Level2]
        } else {
            Vec::new()
        };
        self.trace.basis_extensions += 1;
        if plan.is_empty() {
            let t = self.least_constrained(&ledger, None);
            return self.branch_on(&ctx, ledger, &[], 0, Some(t));
        }
        self.branch_on(&ctx, ledger, &plan, 0, None)
    }

    fn pick(&self, ctx: &LevelContext, ledger: &VertexLedger, p: Pick) -> Option<Vertex> {
        let lv = ctx.levels();
        let open = |v: &&Vertex| !ledger.is_dominated(**v);
        match p {
            Pick::Level2Color(c) => lv.at(2).iter().filter(open).copied().find(|&u| self.g.color(u) == c),
            Pick::Level2 => lv.at(2).iter().filter(open).copied().next(),
            Pick::Deep => lv.levels().iter().skip(5).flatten().filter(open).copied().min(),
            Pick::ExcludedLevel3 => {
                lv.at(2).iter().find(open)?;
                lv.at(3)
                    .iter()
                    .filter(open)
                    .copied()
                    .find(|&v| ledger.status(v) == Status::Excluded)
            }
        }
    }

    /// Undominated vertex (optionally inside `within`) with the fewest
    /// candidates, lowest id on ties.
    fn least_constrained(&self, ledger: &VertexLedger, within: Option<&[Vertex]>) -> Vertex {
        let all: Vec<Vertex>;
        let pool = match within {
            Some(w) => w,
            None => {
                all = (0..self.g.n()).collect();
                &all
            }
        };
        pool.iter()
            .copied()
            .filter(|&v| !ledger.is_dominated(v))
            .min_by_key(|&v| (ledger.candidate_count(self.g, v), v))
            .expect("an undominated vertex exists")
    }

    /// Branches on the candidates of `plan[k]`'s vertex (or of `forced`),
    /// then continues with `plan[k + 1]`. After the last step the enlarged
    /// basis is solved from scratch.
    fn branch_on(
        &mut self,
        ctx: &LevelContext,
        ledger: VertexLedger,
        plan: &[Pick],
        k: usize,
        forced: Option<Vertex>,
    ) -> Result<Option<EdsCertificate>, SolveError> {
        let target = match forced {
            Some(t) => Some(t),
            None if k < plan.len() => self.pick(ctx, &ledger, plan[k]),
            None => return self.solve_with_basis(ledger),
        };
        let Some(t) = target else {
            return self.branch_on(ctx, ledger, plan, k + 1, None);
        };
        for c in ledger.candidates(self.g, t) {
            self.branch()?;
            let mut next = ledger.clone();
            if force_vertex(self.g, &mut next, c).is_infeasible() {
                continue;
            }
            let out = unit_propagate_with(self.g, &mut next, self.rules.lookahead);
            self.record(&out);
            if out.is_infeasible() {
                continue;
            }
            let found = if next.is_complete() {
                self.finish(&next)?
            } else if forced.is_some() {
                self.solve_with_basis(next)?
            } else {
                self.branch_on(ctx, next, plan, k + 1, None)?
            };
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }

    /// Search under the level hypothesis with the levels of `ctx` frozen:
    /// the components of `G[N2 ∪ N3 ∪ N4]` are independent, so each one is
    /// settled in turn and the first success is kept.
    pub fn solve_levelled(
        &mut self,
        mut ctx: LevelContext,
        mut ledger: VertexLedger,
    ) -> Result<Option<EdsCertificate>, SolveError> {
        let g = self.g;
        loop {
            let out = reduce_fixpoint_with(g, &mut ledger, &mut ctx, Leveling::Frozen, self.rules);
            self.record(&out);
            if out.is_infeasible() {
                return Ok(None);
            }
            if ledger.is_complete() {
                return self.finish(&ledger);
            }
            let q = self.open_component(&ctx, &ledger);
            match self.solve_part(&mut ctx, ledger, &q)? {
                Some(done) => ledger = done,
                None => return Ok(None),
            }
        }
    }

    /// The component of `G[N2 ∪ N3 ∪ N4]` (or, off hypothesis, of the
    /// undominated part) containing the least undominated vertex.
    fn open_component(&self, ctx: &LevelContext, ledger: &VertexLedger) -> Vec<Vertex> {
        let g = self.g;
        let lv = ctx.levels();
        let inside = |v: Vertex| matches!(lv.level(v), Some(2..=4));
        let start = (0..g.n())
            .find(|&v| !ledger.is_dominated(v))
            .expect("an undominated vertex exists");
        if !inside(start) {
            return vec![start];
        }
        let mut seen = vec![false; g.n()];
        seen[start] = true;
        let mut comp = vec![start];
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            for &w in g.neighbors(v) {
                if inside(w) && !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
        }
        comp.sort_unstable();
        comp
    }

    /// Branches until every vertex of `q` is dominated; returns that ledger.
    fn solve_part(
        &mut self,
        ctx: &mut LevelContext,
        mut ledger: VertexLedger,
        q: &[Vertex],
    ) -> Result<Option<VertexLedger>, SolveError> {
        let g = self.g;
        let out = reduce_fixpoint_with(g, &mut ledger, ctx, Leveling::Frozen, self.rules);
        self.record(&out);
        if out.is_infeasible() {
            return Ok(None);
        }
        if q.iter().all(|&v| ledger.is_dominated(v)) {
            return Ok(Some(ledger));
        }

        if let Some(x) = self.midpoint(ctx, &ledger, q).or_else(|| self.common_anchor(ctx, &ledger, q)) {
            // x ∈ D, then x ∉ D.
            for take in [true, false] {
                self.branch()?;
                let mut next = ledger.clone();
                let out = if take {
                    force_vertex(g, &mut next, x)
                } else {
                    exclude_vertex(g, &mut next, x)
                };
                if out.is_infeasible() {
                    continue;
                }
                if let Some(done) = self.solve_part(ctx, next, q)? {
                    return Ok(Some(done));
                }
            }
            return Ok(None);
        }

        let lv = ctx.levels();
        let anchor: Option<Vertex> = q
            .iter()
            .copied()
            .filter(|&u| lv.level(u) == Some(2) && !ledger.is_dominated(u))
            .min_by_key(|&u| {
                let cands = ledger.candidates(g, u);
                let joins = q
                    .iter()
                    .all(|&v| lv.level(v) != Some(3) || ledger.status(v) != Status::Free || g.has_edge(u, v) || v == u);
                (cands.len(), !joins, u)
            });
        if let Some(u) = anchor {
            for v1 in ledger.candidates(g, u) {
                self.branch()?;
                let mut next = ledger.clone();
                let out = if self.rules.choice && ctx.levels().level(v1) == Some(3) {
                    choice_propagation(g, &mut next, ctx, u, v1)
                } else {
                    force_vertex(g, &mut next, v1)
                };
                self.record(&out);
                if out.is_infeasible() {
                    continue;
                }
                if let Some(done) = self.solve_part(ctx, next, q)? {
                    return Ok(Some(done));
                }
            }
            return Ok(None);
        }

        let t = self.least_constrained(&ledger, Some(q));
        for c in ledger.candidates(g, t) {
            self.branch()?;
            let mut next = ledger.clone();
            if force_vertex(g, &mut next, c).is_infeasible() {
                continue;
            }
            if let Some(done) = self.solve_part(ctx, next, q)? {
                return Ok(Some(done));
            }
        }
        Ok(None)
    }

    /// Midpoint `x` of an induced `y1-x1-u1-x-u2-x2-y2` where `x1y1` and
    /// `x2y2` are edges of different nontrivial level-3 components, `x`
    /// outside both, and `u1, u2` undominated level-2 vertices.
    fn midpoint(&self, ctx: &LevelContext, ledger: &VertexLedger, q: &[Vertex]) -> Option<Vertex> {
        let g = self.g;
        let lv = ctx.levels();
        let comps_of = |u: Vertex, skip: Option<usize>| -> Vec<usize> {
            let mut c: Vec<usize> = g
                .neighbors(u)
                .iter()
                .filter_map(|&w| ctx.component_of(w))
                .filter(|&k| Some(k) != skip)
                .collect();
            c.sort_unstable();
            c.dedup();
            c
        };
        for &x in q {
            if lv.level(x) != Some(3) || ledger.status(x) != Status::Free {
                continue;
            }
            let own = ctx.component_of(x);
            let ups: Vec<Vertex> = g
                .neighbors(x)
                .iter()
                .copied()
                .filter(|&u| lv.level(u) == Some(2) && !ledger.is_dominated(u))
                .collect();
            for (i, &u1) in ups.iter().enumerate() {
                let c1 = comps_of(u1, own);
                if c1.is_empty() {
                    continue;
                }
                for &u2 in &ups[i + 1..] {
                    let c2 = comps_of(u2, own);
                    let only1 = c1.iter().any(|k| !c2.contains(k));
                    let only2 = c2.iter().any(|k| !c1.contains(k));
                    if only1 && only2 {
                        return Some(x);
                    }
                }
            }
        }
        None
    }

    /// A free level-3 vertex adjacent to at least three undominated level-2
    /// vertices of one color in `q`, all of which have at least two
    /// candidates.
    fn common_anchor(&self, ctx: &LevelContext, ledger: &VertexLedger, q: &[Vertex]) -> Option<Vertex> {
        let g = self.g;
        let lv = ctx.levels();
        q.iter().copied().find(|&v| {
            lv.level(v) == Some(3)
                && ledger.status(v) == Status::Free
                && g.neighbors(v)
                    .iter()
                    .filter(|&&u| {
                        lv.level(u) == Some(2) && !ledger.is_dominated(u) && ledger.candidate_count(g, u) >= 2
                    })
                    .count()
                    >= 3
        })
    }
}
