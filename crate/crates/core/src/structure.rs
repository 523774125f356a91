//! Subpattern graphs, approximate partial-order diagnostics, cost
//! associativity, the Gamma rebracketing check and pattern-transitivity scans.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cosm::RelativeMode;
use crate::cost::{ExtCost, Intensity};
use crate::error::{Error, Result};
use crate::multiset::{multiset_simplicity, Multiset, Solver};
use crate::pattern::{Denominator, PatternEngine};
use crate::scalar::Scalar;
use crate::system::CombinationalSystem;

/// Entity cap for exhaustive chain scans.
pub const DEFAULT_CHAIN_CAP: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PositionPolicy {
    /// `x` only as the left operand.
    #[default]
    LeftOnly,
    Both,
}

impl FromStr for PositionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" | "left-only" => Ok(PositionPolicy::LeftOnly),
            "both" => Ok(PositionPolicy::Both),
            _ => Err(Error::Parameter(format!("unknown position policy `{s}`"))),
        }
    }
}

/// Which score a witness contributes to `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Relation {
    /// Two-measure intensity with the base denominator.
    #[default]
    Subpattern,
    /// Minimum coordinate of the pattern vector.
    Submultipattern(Denominator),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub z: usize,
    pub op: usize,
    /// True when `x` is the left operand.
    pub x_left: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairScore<S> {
    pub q: Intensity<S>,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubpatternGraph<S> {
    pub context: usize,
    pub policy: PositionPolicy,
    pub relation: Relation,
    n: usize,
    scores: Vec<Option<PairScore<S>>>,
}

impl<S: Scalar> SubpatternGraph<S> {
    pub fn entity_count(&self) -> usize {
        self.n
    }

    /// Best witness for `x` inside `y`; `None` when no decomposition exists.
    pub fn score(&self, x: usize, y: usize) -> Option<&PairScore<S>> {
        self.scores[x * self.n + y].as_ref()
    }

    pub fn q(&self, x: usize, y: usize) -> Option<&Intensity<S>> {
        self.score(x, y).map(|s| &s.q)
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        x != y && self.q(x, y).is_some_and(Intensity::is_positive)
    }

    /// The reflexive closure of the edge relation.
    pub fn leq(&self, x: usize, y: usize) -> bool {
        x == y || self.has_edge(x, y)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|x| (0..self.n).map(move |y| (x, y)))
            .filter(|&(x, y)| self.has_edge(x, y))
            .collect()
    }

    pub fn successors(&self, x: usize) -> Vec<usize> {
        (0..self.n).filter(|&y| self.has_edge(x, y)).collect()
    }

    pub fn predecessors(&self, y: usize) -> Vec<usize> {
        (0..self.n).filter(|&x| self.has_edge(x, y)).collect()
    }

    /// `{y : x <= y}`, sorted, containing `x`.
    pub fn intension(&self, x: usize) -> Vec<usize> {
        (0..self.n).filter(|&y| self.leq(x, y)).collect()
    }

    /// `{y : y <= x}`, sorted, containing `x`.
    pub fn extension(&self, x: usize) -> Vec<usize> {
        (0..self.n).filter(|&y| self.leq(y, x)).collect()
    }

    /// Edges not implied by a longer path.
    pub fn transitive_reduction(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        let mut reach = vec![false; n * n];
        for (x, y) in self.edges() {
            reach[x * n + y] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i * n + k] {
                    for j in 0..n {
                        if reach[k * n + j] {
                            reach[i * n + j] = true;
                        }
                    }
                }
            }
        }
        self.edges()
            .into_iter()
            .filter(|&(x, y)| {
                !(0..n).any(|k| k != x && k != y && reach[x * n + k] && reach[k * n + y])
            })
            .collect()
    }

    /// Graphviz rendering of the transitive reduction, labelled with `Q`.
    pub fn to_dot(&self, system: &CombinationalSystem<S>) -> String {
        let mut out = String::from("digraph subpattern {\n");
        for x in 0..self.n {
            let _ = writeln!(out, "  n{x} [label={:?}];", system.name(x));
        }
        for (x, y) in self.transitive_reduction() {
            let q = self.q(x, y).expect("edge has a score");
            let _ = writeln!(out, "  n{x} -> n{y} [label=\"{q}\"];");
        }
        out.push_str("}\n");
        out
    }
}

fn better<S: Scalar>(a: &PairScore<S>, b: &PairScore<S>) -> bool {
    match a.q.total_cmp(&b.q) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => {
            (a.witness.z, a.witness.op, !a.witness.x_left) < (b.witness.z, b.witness.op, !b.witness.x_left)
        }
    }
}

fn offer<S: Scalar>(slot: &mut Option<PairScore<S>>, cand: PairScore<S>) {
    match slot {
        Some(cur) if !better(&cand, cur) => {}
        _ => *slot = Some(cand),
    }
}

fn score<S: Scalar>(
    engine: &PatternEngine<'_, S>,
    relation: Relation,
    left: usize,
    right: usize,
    op: usize,
    target: usize,
) -> Option<Intensity<S>> {
    match relation {
        Relation::Subpattern => engine.coordinate(0, 1, left, right, op, target, Denominator::Base).ok(),
        Relation::Submultipattern(denom) => {
            let k = engine.system().measure_count();
            let mut worst: Option<Intensity<S>> = None;
            for j in 1..k {
                let c = engine.coordinate(0, j, left, right, op, target, denom).ok()?;
                worst = Some(match worst {
                    Some(w) if w.total_cmp(&c) != Ordering::Greater => w,
                    _ => c,
                });
            }
            worst
        }
    }
}

/// Computes `Q(x, y)` for every ordered pair over the engine's context.
pub fn build_subpattern_graph<S: Scalar>(
    engine: &PatternEngine<'_, S>,
    policy: PositionPolicy,
    relation: Relation,
) -> Result<SubpatternGraph<S>> {
    let sys = engine.system();
    if sys.measure_count() < 2 {
        return Err(Error::Parameter("subpattern graphs need two measures".into()));
    }
    let n = sys.entity_count();
    let e = sys.identity();
    let ops = sys.operator_count();
    let rows: Vec<Vec<Option<PairScore<S>>>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut row: Vec<Option<PairScore<S>>> = vec![None; n];
            let push = |y: usize, left: usize, right: usize, op: usize, x_left: bool, row: &mut Vec<Option<PairScore<S>>>| {
                if let Some(q) = score(engine, relation, left, right, op, y) {
                    let z = if x_left { right } else { left };
                    offer(&mut row[y], PairScore { q, witness: Witness { z, op, x_left } });
                }
            };
            for &ri in sys.consumers(x) {
                let r = &sys.reactions()[ri];
                for &y in &r.products {
                    if r.left == x {
                        push(y, x, r.right, r.op, true, &mut row);
                    }
                    if policy == PositionPolicy::Both && r.right == x {
                        push(y, r.left, x, r.op, false, &mut row);
                    }
                }
            }
            // implicit identity decompositions
            for op in 0..ops {
                push(x, x, e, op, true, &mut row);
                if policy == PositionPolicy::Both {
                    push(x, e, x, op, false, &mut row);
                }
                if x == e {
                    for y in 0..n {
                        push(y, e, y, op, true, &mut row);
                        if policy == PositionPolicy::Both {
                            push(y, y, e, op, false, &mut row);
                        }
                    }
                }
            }
            row
        })
        .collect();
    Ok(SubpatternGraph {
        context: engine.context(),
        policy,
        relation,
        n,
        scores: rows.into_iter().flatten().collect(),
    })
}

pub fn subpattern_graph<S: Scalar>(
    system: &CombinationalSystem<S>,
    context: usize,
    policy: PositionPolicy,
) -> Result<SubpatternGraph<S>> {
    let engine = PatternEngine::new(system, context, RelativeMode::FreeContext, None)?;
    build_subpattern_graph(&engine, policy, Relation::Subpattern)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainScan {
    Exhaustive { cap: usize },
    Sampled { samples: usize, seed: u64 },
}

impl Default for ChainScan {
    fn default() -> Self {
        ChainScan::Exhaustive { cap: DEFAULT_CHAIN_CAP }
    }
}

pub const REFLEXIVE_NOTE: &str =
    "<= is the reflexive closure of strict positivity; Q(x,x) via the identity is 0";

#[derive(Clone, Debug, PartialEq)]
pub struct OrderDiagnostics<S> {
    /// Pairs `x < y` with edges both ways.
    pub antisymmetry_violations: Vec<(usize, usize)>,
    /// `max(0, -Q(x,z))` over chains `x -> y -> z`; infinite when some chain
    /// has no witness for `x` in `z`.
    pub transitivity_defect: ExtCost<S>,
    pub worst_chain: Option<(usize, usize, usize)>,
    pub chains: u64,
    pub exhaustive: bool,
    pub reflexive_note: &'static str,
}

fn chain_defect<S: Scalar>(graph: &SubpatternGraph<S>, x: usize, z: usize) -> ExtCost<S> {
    match graph.q(x, z) {
        Some(Intensity::Value(v)) if v.is_negative() => ExtCost::Finite(-v.clone()),
        Some(Intensity::Value(_)) => ExtCost::zero(),
        _ => ExtCost::Infinite,
    }
}

pub fn order_diagnostics<S: Scalar>(graph: &SubpatternGraph<S>, scan: ChainScan) -> Result<OrderDiagnostics<S>> {
    let n = graph.entity_count();
    let mut antisymmetry_violations = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            if graph.has_edge(x, y) && graph.has_edge(y, x) {
                antisymmetry_violations.push((x, y));
            }
        }
    }
    type Best<S> = (ExtCost<S>, Option<(usize, usize, usize)>, u64);
    let fold = |acc: Best<S>, item: Best<S>| -> Best<S> {
        let (d, c, k) = item;
        if d.total_cmp(&acc.0) == Ordering::Greater {
            (d, c, acc.2 + k)
        } else {
            (acc.0, acc.1, acc.2 + k)
        }
    };
    let start: Best<S> = (ExtCost::zero(), None, 0);
    let (defect, worst, chains, exhaustive) = match scan {
        ChainScan::Exhaustive { cap } => {
            if n > cap {
                return Err(Error::CapExceeded { what: "chain-scan entity", cap, actual: n });
            }
            let per_y: Vec<Best<S>> = (0..n)
                .into_par_iter()
                .map(|y| {
                    let succ = graph.successors(y);
                    let mut best: Best<S> = (ExtCost::zero(), None, 0);
                    for x in graph.predecessors(y) {
                        for &z in &succ {
                            best = fold(best, (chain_defect(graph, x, z), Some((x, y, z)), 1));
                        }
                    }
                    best
                })
                .collect();
            let (d, w, k) = per_y.into_iter().fold(start, fold);
            (d, w, k, true)
        }
        ChainScan::Sampled { samples, seed } => {
            let edges = graph.edges();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best = start;
            if !edges.is_empty() {
                for _ in 0..samples {
                    let (x, y) = edges[rng.gen_range(0..edges.len())];
                    let succ = graph.successors(y);
                    if succ.is_empty() {
                        continue;
                    }
                    let z = succ[rng.gen_range(0..succ.len())];
                    best = fold(best, (chain_defect(graph, x, z), Some((x, y, z)), 1));
                }
            }
            (best.0, best.1, best.2, false)
        }
    };
    Ok(OrderDiagnostics {
        antisymmetry_violations,
        transitivity_defect: defect,
        worst_chain: worst,
        chains,
        exhaustive,
        reflexive_note: REFLEXIVE_NOTE,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripleCosts<S> {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    /// Per measure: `min sigma*(i,y,z) + sigma*(j,x,t)` over `t` in `y *_i z`.
    pub c1: Vec<ExtCost<S>>,
    /// Per measure: `min sigma*(j,x,y) + sigma*(i,s,z)` over `s` in `x *_j y`.
    pub c2: Vec<ExtCost<S>>,
    pub defect: ExtCost<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssociativityReport<S> {
    pub is_associative: bool,
    pub measures: Vec<usize>,
    pub defect: ExtCost<S>,
    pub triples: Vec<TripleCosts<S>>,
}

struct Bracketing<S> {
    right_nested: BTreeSet<usize>,
    left_nested: BTreeSet<usize>,
    c1: Vec<ExtCost<S>>,
    c2: Vec<ExtCost<S>>,
}

impl<S: Scalar> Bracketing<S> {
    fn new(k: usize) -> Self {
        Bracketing {
            right_nested: BTreeSet::new(),
            left_nested: BTreeSet::new(),
            c1: vec![ExtCost::Infinite; k],
            c2: vec![ExtCost::Infinite; k],
        }
    }
}

fn abs_gap<S: Scalar>(a: &ExtCost<S>, b: &ExtCost<S>) -> ExtCost<S> {
    match (a, b) {
        (ExtCost::Finite(a), ExtCost::Finite(b)) => ExtCost::Finite((a.clone() - b.clone()).abs()),
        (ExtCost::Infinite, ExtCost::Infinite) => ExtCost::zero(),
        _ => ExtCost::Infinite,
    }
}

fn names<S: Scalar>(system: &CombinationalSystem<S>, set: &BTreeSet<usize>) -> String {
    let parts: Vec<&str> = set.iter().map(|&p| system.name(p)).collect();
    format!("{{{}}}", parts.join(","))
}

/// Checks that `x *_j (y *_i z)` and `(x *_j y) *_i z` agree on every triple
/// where both are defined, then measures the cost gap between the two
/// bracketings.
pub fn cost_associativity<S: Scalar>(
    system: &CombinationalSystem<S>,
    measures: &[usize],
) -> Result<AssociativityReport<S>> {
    for &m in measures {
        if m >= system.measure_count() {
            return Err(Error::UnknownMeasure(m.to_string()));
        }
    }
    let e = system.identity();
    let cost = |m: usize, op: usize, l: usize, r: usize| ExtCost::from(system.reaction_cost(m, op, l, r, e));
    let k = measures.len();
    let mut table: BTreeMap<(usize, usize, usize, usize, usize), Bracketing<S>> = BTreeMap::new();
    let reactions = system.reactions();
    for inner in reactions {
        let (i, y, z) = (inner.op, inner.left, inner.right);
        if y == e || z == e {
            continue;
        }
        for &t in &inner.products {
            for &ri in system.consumers(t) {
                let outer = &reactions[ri];
                if outer.right != t || outer.left == e {
                    continue;
                }
                let (j, x) = (outer.op, outer.left);
                let b = table.entry((x, y, z, i, j)).or_insert_with(|| Bracketing::new(k));
                b.right_nested.extend(outer.products.iter().copied());
                for (slot, &m) in measures.iter().enumerate() {
                    let c = cost(m, i, y, z) + cost(m, j, x, t);
                    b.c1[slot] = b.c1[slot].clone().min(c);
                }
            }
        }
    }
    for inner in reactions {
        let (j, x, y) = (inner.op, inner.left, inner.right);
        if x == e || y == e {
            continue;
        }
        for &s in &inner.products {
            for &ri in system.consumers(s) {
                let outer = &reactions[ri];
                if outer.left != s || outer.right == e {
                    continue;
                }
                let (i, z) = (outer.op, outer.right);
                let b = table.entry((x, y, z, i, j)).or_insert_with(|| Bracketing::new(k));
                b.left_nested.extend(outer.products.iter().copied());
                for (slot, &m) in measures.iter().enumerate() {
                    let c = cost(m, j, x, y) + cost(m, i, s, z);
                    b.c2[slot] = b.c2[slot].clone().min(c);
                }
            }
        }
    }
    let mut per_triple: BTreeMap<(usize, usize, usize), (Vec<ExtCost<S>>, Vec<ExtCost<S>>)> = BTreeMap::new();
    for (&(x, y, z, i, j), b) in &table {
        if b.right_nested.is_empty() || b.left_nested.is_empty() {
            continue;
        }
        if b.right_nested != b.left_nested {
            return Err(Error::AssociativityViolation {
                x: system.name(x).to_string(),
                y: system.name(y).to_string(),
                z: system.name(z).to_string(),
                detail: format!(
                    "{x} {j} ({y} {i} {z}) = {} but ({x} {j} {y}) {i} {z} = {}",
                    names(system, &b.right_nested),
                    names(system, &b.left_nested),
                    x = system.name(x),
                    y = system.name(y),
                    z = system.name(z),
                    i = system.op_name(i),
                    j = system.op_name(j),
                ),
            });
        }
        let slot = per_triple
            .entry((x, y, z))
            .or_insert_with(|| (vec![ExtCost::Infinite; k], vec![ExtCost::Infinite; k]));
        for m in 0..k {
            slot.0[m] = slot.0[m].clone().min(b.c1[m].clone());
            slot.1[m] = slot.1[m].clone().min(b.c2[m].clone());
        }
    }
    let mut defect = ExtCost::zero();
    let triples: Vec<TripleCosts<S>> = per_triple
        .into_iter()
        .map(|((x, y, z), (c1, c2))| {
            let d = c1.iter().zip(&c2).fold(ExtCost::zero(), |acc, (a, b)| acc.max(abs_gap(a, b)));
            defect = defect.clone().max(d.clone());
            TripleCosts { x, y, z, c1, c2, defect: d }
        })
        .collect();
    Ok(AssociativityReport { is_associative: true, measures: measures.to_vec(), defect, triples })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaTriple<S> {
    pub x: usize,
    pub w: usize,
    pub v: usize,
    pub op_i: usize,
    /// `(G lift w) bind v`.
    pub bound: usize,
    /// Products of `x *_i bound`.
    pub target: Vec<usize>,
    /// `(op_j, y)` with `(x *_i w) *_j v` equal to `target`, if any.
    pub rebracketing: Option<(usize, usize)>,
    pub lhs: Option<ExtCost<S>>,
    pub rhs: Option<ExtCost<S>>,
    /// Premise as stated.
    pub premise: Option<bool>,
    /// Premise with `sigma(x)` added to the right-hand side as well.
    pub premise_balanced: Option<bool>,
    /// `I_{x, bound}(target)`, the intensity of the rebracketed witness.
    pub witness_intensity: Option<Intensity<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaReport<S> {
    /// `sigma(Gamma)` plus the largest lift and bind operator costs.
    pub c: ExtCost<S>,
    pub triples: Vec<GammaTriple<S>>,
    pub law_holds: usize,
    pub premise_holds: usize,
    pub premise_balanced_holds: usize,
    pub diagnostics: OrderDiagnostics<S>,
    /// Every chain satisfies `max_w I_{x,w}(z) >= -c`.
    pub conclusion_holds: bool,
}

impl<S: Scalar> GammaReport<S> {
    pub fn law_holds_everywhere(&self) -> bool {
        self.law_holds == self.triples.len()
    }
}

pub fn gamma_check<S: Scalar>(system: &CombinationalSystem<S>, cap: usize) -> Result<GammaReport<S>> {
    let role = system
        .roles()
        .gamma
        .clone()
        .ok_or_else(|| Error::GammaMissing("the system declares no gamma role".into()))?;
    if system.measure_count() < 2 {
        return Err(Error::Parameter("the gamma check needs two measures".into()));
    }
    let e = system.identity();
    let engine = PatternEngine::new(system, e, RelativeMode::FreeContext, None)?;
    let s1 = |x: usize| engine.sigma(0, x);
    let s2 = |op: usize, l: usize, r: usize| ExtCost::from(system.reaction_cost(1, op, l, r, e));
    let reactions = system.reactions();

    let lifts: Vec<_> = reactions.iter().filter(|r| r.op == role.alpha && r.left == role.entity).collect();
    if lifts.is_empty() {
        return Err(Error::GammaMissing("no lift reactions on the gamma entity".into()));
    }
    let max_cost = |it: &mut dyn Iterator<Item = ExtCost<S>>| it.fold(ExtCost::zero(), ExtCost::max);
    let lift_cost = max_cost(&mut lifts.iter().map(|r| s2(r.op, r.left, r.right)));
    let mut binds = Vec::new();
    for l in &lifts {
        for &lw in &l.products {
            for &ri in system.consumers(lw) {
                let r = &reactions[ri];
                if r.op == role.beta && r.left == lw {
                    binds.push((l.right, r));
                }
            }
        }
    }
    let bind_cost = max_cost(&mut binds.iter().map(|(_, r)| s2(r.op, r.left, r.right)));
    let c = s1(role.entity) + lift_cost + bind_cost;

    let mut triples = Vec::new();
    for (w, bind) in &binds {
        let (w, v) = (*w, bind.right);
        for &m in &bind.products {
            for &ri in system.consumers(m) {
                let app = &reactions[ri];
                if app.right != m {
                    continue;
                }
                let (x, i) = (app.left, app.op);
                let target: BTreeSet<usize> = app.products.iter().copied().collect();
                let mut rebracketing = None;
                if let Some(ys) = system.products(i, x, w) {
                    'search: for y in ys {
                        for j in 0..system.operator_count() {
                            let got = system.products(j, y, v).unwrap_or_default();
                            if got.iter().copied().collect::<BTreeSet<_>>() == target {
                                rebracketing = Some((j, y));
                                break 'search;
                            }
                        }
                    }
                }
                let (lhs, rhs, premise, premise_balanced) = match rebracketing {
                    Some((j, y)) => {
                        let lhs = s1(x) + s1(m) + s2(i, x, m);
                        let rhs = s1(w) + s1(v) + s2(i, x, w) + s2(j, y, v) + c.clone();
                        let balanced = rhs.clone() + s1(x);
                        (Some(lhs.clone()), Some(rhs.clone()), Some(lhs.le(&rhs)), Some(lhs.le(&balanced)))
                    }
                    None => (None, None, None, None),
                };
                let witness_intensity = app
                    .products
                    .first()
                    .and_then(|&t| engine.coordinate(0, 1, x, m, i, t, Denominator::Base).ok());
                triples.push(GammaTriple {
                    x,
                    w,
                    v,
                    op_i: i,
                    bound: m,
                    target: target.into_iter().collect(),
                    rebracketing,
                    lhs,
                    rhs,
                    premise,
                    premise_balanced,
                    witness_intensity,
                });
            }
        }
    }
    triples.sort_by_key(|t| (t.x, t.w, t.v, t.op_i, t.bound));
    let graph = build_subpattern_graph(&engine, PositionPolicy::LeftOnly, Relation::Subpattern)?;
    let diagnostics = order_diagnostics(&graph, ChainScan::Exhaustive { cap })?;
    let conclusion_holds = diagnostics.transitivity_defect.le(&c);
    Ok(GammaReport {
        law_holds: triples.iter().filter(|t| t.rebracketing.is_some()).count(),
        premise_holds: triples.iter().filter(|t| t.premise == Some(true)).count(),
        premise_balanced_holds: triples.iter().filter(|t| t.premise_balanced == Some(true)).count(),
        c,
        triples,
        diagnostics,
        conclusion_holds,
    })
}

/// One instantiation of the pattern-transitivity scheme: `x *_i y` yields
/// both `a` and `b`, and `a *_j b` (in either order) yields `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionInstance<S> {
    pub x: usize,
    pub y: usize,
    pub op_i: usize,
    pub a: usize,
    pub b: usize,
    pub op_j: usize,
    pub z: usize,
    pub w: usize,
    /// `(x,y)` in the set `{a,b}`, costed without context.
    pub set_intensity: Intensity<S>,
    /// `(a,b)` in `z` relative to `w`.
    pub pair_intensity: Intensity<S>,
    /// `(x,y)` in `z` through the two-step route, relative to `w`.
    pub conclusion: Intensity<S>,
    pub trace: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CompositionReport<S> {
    /// Instantiations examined, premises satisfied or not.
    pub scanned: usize,
    pub confirmed: Vec<CompositionInstance<S>>,
    pub counterexamples: Vec<CompositionInstance<S>>,
}

fn ratio<S: Scalar>(num: ExtCost<S>, minus: ExtCost<S>, den: &ExtCost<S>) -> Option<Intensity<S>> {
    let ExtCost::Finite(d) = den else { return None };
    if d.is_zero() {
        return None;
    }
    let ExtCost::Finite(n) = num else { return None };
    Some(match minus {
        ExtCost::Finite(h) => Intensity::Value((n - h) / d.clone()),
        ExtCost::Infinite => Intensity::NegInfinite,
    })
}

/// Scans every instantiation over the given contexts. Set costs use the
/// exact multiset solver on measure 0.
pub fn transitivity_composition_check<S: Scalar>(
    system: &CombinationalSystem<S>,
    contexts: &[usize],
    multiset_cap: usize,
) -> Result<CompositionReport<S>> {
    if system.measure_count() < 2 {
        return Err(Error::Parameter("the transitivity check needs two measures".into()));
    }
    let e = system.identity();
    let base = PatternEngine::new(system, e, RelativeMode::FreeContext, None)?;
    let mut engines = HashMap::new();
    for &w in contexts {
        if w >= system.entity_count() {
            return Err(Error::UnknownEntity(w.to_string()));
        }
        engines.insert(w, PatternEngine::new(system, w, RelativeMode::FreeContext, None)?);
    }
    let mut set_costs: HashMap<(usize, usize), ExtCost<S>> = HashMap::new();
    let mut report = CompositionReport { scanned: 0, confirmed: Vec::new(), counterexamples: Vec::new() };
    let reactions = system.reactions();
    for r1 in reactions {
        let outs: BTreeSet<usize> = r1.products.iter().copied().filter(|&p| p != e).collect();
        let (x, y, i) = (r1.left, r1.right, r1.op);
        for (&a, &b) in outs.iter().flat_map(|a| outs.iter().map(move |b| (a, b))) {
            // ordered pairs: (a, b) are the operands of the second reaction
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if !set_costs.contains_key(&key) {
                let set = Multiset::from_pairs([(a, 1), (b, 1)]);
                let v = multiset_simplicity(system, 0, &set, Solver::Exact, multiset_cap)?.value;
                set_costs.insert(key, v);
            }
            let set_cost = set_costs[&key].clone();
            let h_set = base.sigma(0, x) + base.sigma(0, y) + ExtCost::from(system.reaction_cost(1, i, x, y, e));
            for &ri in system.consumers(a) {
                let r2 = &reactions[ri];
                if r2.left != a || r2.right != b {
                    continue;
                }
                let j = r2.op;
                for &z in &r2.products {
                    for &w in contexts {
                        report.scanned += 1;
                        let eng = &engines[&w];
                        let Some(set_intensity) = ratio(set_cost.clone(), h_set.clone(), &set_cost) else { continue };
                        let Ok(pair_intensity) = eng.coordinate(0, 1, a, b, j, z, Denominator::Base) else { continue };
                        if !set_intensity.is_positive() || !pair_intensity.is_positive() {
                            continue;
                        }
                        let op_i = ExtCost::from(system.reaction_cost(1, i, x, y, w));
                        let op_j = ExtCost::from(system.reaction_cost(1, j, a, b, w));
                        let route = eng.sigma(0, x) + eng.sigma(0, y) + op_i.clone() + op_j.clone();
                        let Some(conclusion) = ratio(eng.sigma(0, z), route.clone(), &eng.sigma(0, z)) else { continue };
                        let trace = vec![
                            ("sigma1({a,b})".to_string(), set_cost.to_exact_string()),
                            ("sigma1(x)".into(), base.sigma(0, x).to_exact_string()),
                            ("sigma1(y)".into(), base.sigma(0, y).to_exact_string()),
                            ("sigma2*(i,x,y)".into(), ExtCost::from(system.reaction_cost(1, i, x, y, e)).to_exact_string()),
                            ("sigma1(z|w)".into(), eng.sigma(0, z).to_exact_string()),
                            ("sigma1(a|w)".into(), eng.sigma(0, a).to_exact_string()),
                            ("sigma1(b|w)".into(), eng.sigma(0, b).to_exact_string()),
                            ("sigma1(x|w)".into(), eng.sigma(0, x).to_exact_string()),
                            ("sigma1(y|w)".into(), eng.sigma(0, y).to_exact_string()),
                            ("sigma2*(i,x,y|w)".into(), op_i.to_exact_string()),
                            ("sigma2*(j,a,b|w)".into(), op_j.to_exact_string()),
                            ("route(x,y->z|w)".into(), route.to_exact_string()),
                        ];
                        let inst = CompositionInstance {
                            x,
                            y,
                            op_i: i,
                            a,
                            b,
                            op_j: j,
                            z,
                            w,
                            set_intensity,
                            pair_intensity,
                            trace,
                            conclusion: conclusion.clone(),
                        };
                        if conclusion.is_positive() {
                            report.confirmed.push(inst);
                        } else {
                            report.counterexamples.push(inst);
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::system::{generate_builtin, BuiltinFamily, GenerateParams, Reaction};
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn str1_edge() {
        let sys = fixtures::str1();
        let ent = |s: &str| sys.entity(s).unwrap();
        let g = subpattern_graph(&sys, sys.identity(), PositionPolicy::LeftOnly).unwrap();
        let s = g.score(ent("aaaa"), ent("aaaaaaaa")).unwrap();
        assert_eq!(s.q, Intensity::Value(q(1, 30)));
        assert_eq!(s.witness, Witness { z: ent("aaaa"), op: sys.operator("sq").unwrap(), x_left: true });
        assert!(g.has_edge(ent("aaaa"), ent("aaaaaaaa")));
        assert_eq!(g.q(ent("ab"), ent("ab")), Some(&Intensity::Value(q(0, 1))));
        assert!(!g.has_edge(ent("ab"), ent("ab")));
        assert!(!g.has_edge(ent("a"), ent("b")));
        assert!(g.extension(ent("aaaaaaaa")).contains(&ent("aaaa")));
    }

    #[test]
    fn string_concat_is_an_exact_order() {
        let sys = fixtures::string_concat();
        let g = subpattern_graph(&sys, sys.identity(), PositionPolicy::LeftOnly).unwrap();
        let d = order_diagnostics(&g, ChainScan::default()).unwrap();
        assert!(d.antisymmetry_violations.is_empty());
        assert_eq!(d.transitivity_defect, ExtCost::zero());
        assert!(d.chains > 0);
        let a = cost_associativity(&sys, &[0, 1]).unwrap();
        assert_eq!(a.defect, ExtCost::zero());
        assert!(!a.triples.is_empty());
    }

    #[test]
    fn perturbed_concat_defects() {
        let p = GenerateParams { amplitude: q(1, 4), ..GenerateParams::default() };
        let sys = generate_builtin::<Rational>(BuiltinFamily::PerturbedConcat, &p).unwrap();
        let a = cost_associativity(&sys, &[0, 1]).unwrap();
        assert!(a.defect.le(&ExtCost::Finite(q(1, 2))));
        assert!(a.defect.is_finite() && !a.defect.is_zero());
        let g = subpattern_graph(&sys, sys.identity(), PositionPolicy::LeftOnly).unwrap();
        let d = order_diagnostics(&g, ChainScan::default()).unwrap();
        let two_c = a.defect.clone() + a.defect.clone();
        assert!(d.transitivity_defect.le(&two_c), "{} > {}", d.transitivity_defect, two_c);
    }

    #[test]
    fn gamma_system_is_not_associative() {
        let sys = fixtures::gamma_system();
        assert_eq!(cost_associativity(&sys, &[0, 1]).unwrap_err().code(), "associativity-violation");
    }

    #[test]
    fn gamma_law_and_bound() {
        let sys = fixtures::gamma_system();
        let r = gamma_check(&sys, DEFAULT_CHAIN_CAP).unwrap();
        assert!(!r.triples.is_empty());
        assert!(r.law_holds_everywhere());
        assert_eq!(r.c, ExtCost::Finite(q(3, 1)));
        assert!(r.conclusion_holds);
        assert_eq!(r.premise_balanced_holds, r.triples.len());
        assert_eq!(r.premise_holds, 0);
        assert_eq!(gamma_check(&fixtures::toy1(), 60).unwrap_err().code(), "gamma-missing");
    }

    #[test]
    fn free_gamma_gives_exact_transitivity() {
        let p = GenerateParams { gamma_cost: q(0, 1), gamma_op_cost: q(0, 1), ..GenerateParams::default() };
        let sys = generate_builtin::<Rational>(BuiltinFamily::GammaSystem, &p).unwrap();
        let r = gamma_check(&sys, DEFAULT_CHAIN_CAP).unwrap();
        assert_eq!(r.c, ExtCost::zero());
        assert_eq!(r.diagnostics.transitivity_defect, ExtCost::zero());
    }

    #[test]
    fn empty_graph_has_no_defect() {
        let sys = fixtures::single_reaction().with_measures(|ms| ms[1].operators = vec![false, true]);
        let g = subpattern_graph(&sys, sys.identity(), PositionPolicy::Both).unwrap();
        assert!(g.edges().is_empty());
        let d = order_diagnostics(&g, ChainScan::default()).unwrap();
        assert_eq!((d.transitivity_defect, d.chains), (ExtCost::zero(), 0));
    }

    fn str1_with_split() -> crate::System {
        let sys = fixtures::str1();
        let ent = |s: &str| sys.entity(s).unwrap();
        let sq = sys.operator("sq").unwrap();
        let sys = sys
            .with_extra_reaction(Reaction { op: sq, left: ent("b"), right: ent("a"), products: vec![ent("aa"), ent("aaaa")] })
            .unwrap();
        sys.with_extra_reaction(Reaction { op: sq, left: ent("aa"), right: ent("aaaa"), products: vec![ent("aaaaaa")] })
            .unwrap()
    }

    #[test]
    fn composition_confirmed_by_construction() {
        let sys = str1_with_split();
        let r = transitivity_composition_check(&sys, &[sys.identity()], 64).unwrap();
        assert!(r.counterexamples.is_empty());
        assert_eq!(r.confirmed.len(), 1);
        let c = &r.confirmed[0];
        assert_eq!(c.set_intensity, Intensity::Value(q(3, 8)));
        assert_eq!(c.pair_intensity, Intensity::Value(q(1, 22)));
        assert_eq!(c.conclusion, Intensity::Value(q(8, 11)));
    }

    #[test]
    fn composition_counterexample_from_context_override() {
        let sys = str1_with_split();
        let ent = |s: &str| sys.entity(s).unwrap();
        let sq = sys.operator("sq").unwrap();
        let key = (sq, ent("b"), ent("a"), ent("bb"));
        let sys = sys.with_measures(|ms| {
            ms[1].context_overrides.insert(key, q(100, 1));
        });
        let r = transitivity_composition_check(&sys, &[sys.identity(), ent("bb")], 64).unwrap();
        assert_eq!(r.confirmed.len(), 1);
        assert_eq!(r.counterexamples.len(), 1);
        assert_eq!(r.counterexamples[0].w, ent("bb"));
        assert!(!r.counterexamples[0].trace.is_empty());
    }

    #[test]
    fn vacuous_composition() {
        let sys = fixtures::str1();
        let r = transitivity_composition_check(&sys, &[sys.identity()], 64).unwrap();
        assert_eq!(r, CompositionReport::default());
    }

    #[test]
    fn graphs_are_deterministic() {
        let sys = fixtures::str1();
        let a = subpattern_graph(&sys, sys.identity(), PositionPolicy::Both).unwrap();
        let b = subpattern_graph(&sys, sys.identity(), PositionPolicy::Both).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_dot(&sys), b.to_dot(&sys));
    }
}
