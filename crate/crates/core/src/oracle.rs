//! Exhaustive enumeration of derivation trees, kept independent of the
//! fixpoint engines so the two can be cross-checked.
//!
//! Only trees with no entity repeated along a root-to-leaf path are
//! enumerated; a repeated entity can always be replaced by its lower subtree
//! without raising any coordinate, so the minima are unaffected.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::cost::{CostVector, ExtCost, Intensity};
use crate::cosm::RelativeMode;
use crate::error::{Error, Result};
use crate::pattern::Denominator;
use crate::scalar::Scalar;
use crate::system::CombinationalSystem;

pub const DEFAULT_ORACLE_CAP: usize = 16;

fn check_cap<S: Scalar>(system: &CombinationalSystem<S>, cap: usize) -> Result<()> {
    let n = system.entity_count();
    if n > cap || n > 64 {
        return Err(Error::CapExceeded { what: "oracle entity", cap: cap.min(64), actual: n });
    }
    Ok(())
}

struct ScalarOracle<'a, S> {
    system: &'a CombinationalSystem<S>,
    measure: usize,
    context: usize,
    memo: HashMap<(usize, u64, bool), ExtCost<S>>,
}

impl<S: Scalar> ScalarOracle<'_, S> {
    /// Cheapest tree for `x` avoiding the entities in `path`; `avail` says
    /// whether the context may still be consumed (once) inside the tree.
    fn best(&mut self, x: usize, path: u64, avail: bool) -> ExtCost<S> {
        let sys = self.system;
        if x == sys.identity() || (avail && x == self.context) {
            return ExtCost::zero();
        }
        if sys.is_atom(x) {
            return ExtCost::from(sys.atom_cost(self.measure, x).cloned());
        }
        if let Some(c) = self.memo.get(&(x, path, avail)) {
            return c.clone();
        }
        let inner = path | (1 << x);
        let mut best = ExtCost::Infinite;
        for r in sys.producers(x) {
            if inner & (1 << r.left) != 0 || inner & (1 << r.right) != 0 {
                continue;
            }
            let Some(c) = sys.reaction_cost(self.measure, r.op, r.left, r.right, self.context) else { continue };
            let mut total = self.best(r.left, inner, false) + self.best(r.right, inner, false);
            if avail {
                let lw = self.best(r.left, inner, true) + self.best(r.right, inner, false);
                let rw = self.best(r.left, inner, false) + self.best(r.right, inner, true);
                total = total.min(lw).min(rw);
            }
            best = best.min(total + ExtCost::Finite(c));
        }
        self.memo.insert((x, path, avail), best.clone());
        best
    }
}

struct LiteralOracle<'a, S> {
    system: &'a CombinationalSystem<S>,
    measure: usize,
    context: usize,
    plain: Vec<ExtCost<S>>,
    memo: HashMap<(usize, u64), ExtCost<S>>,
}

impl<S: Scalar> LiteralOracle<'_, S> {
    fn best(&mut self, x: usize, path: u64) -> ExtCost<S> {
        let sys = self.system;
        let e = sys.identity();
        if x == e {
            return ExtCost::zero();
        }
        let mut best = ExtCost::Infinite;
        if x == self.context && (0..sys.operator_count()).any(|o| sys.measure_spec(self.measure).uses(o)) {
            best = self.plain[x].clone();
        }
        if sys.is_atom(x) {
            return best.min(ExtCost::from(sys.atom_cost(self.measure, x).cloned()));
        }
        if let Some(c) = self.memo.get(&(x, path)) {
            return c.clone();
        }
        let inner = path | (1 << x);
        for r in sys.producers(x) {
            if r.left == self.context || r.right == self.context {
                if let Some(c) = sys.reaction_cost(self.measure, r.op, r.left, r.right, e) {
                    let direct = self.plain[r.left].clone() + self.plain[r.right].clone() + ExtCost::Finite(c);
                    best = best.min(direct);
                }
            }
            if inner & (1 << r.left) != 0 || inner & (1 << r.right) != 0 {
                continue;
            }
            let Some(c) = sys.reaction_cost(self.measure, r.op, r.left, r.right, self.context) else { continue };
            let total = self.best(r.left, inner) + self.best(r.right, inner) + ExtCost::Finite(c);
            best = best.min(total);
        }
        self.memo.insert((x, path), best.clone());
        best
    }
}

/// Brute-force `sigma_j(x | w)` for every entity `x`.
pub fn oracle_table<S: Scalar>(
    system: &CombinationalSystem<S>,
    measure: usize,
    context: usize,
    mode: RelativeMode,
    cap: usize,
) -> Result<Vec<ExtCost<S>>> {
    check_cap(system, cap)?;
    if measure >= system.measure_count() {
        return Err(Error::UnknownMeasure(measure.to_string()));
    }
    let n = system.entity_count();
    let e = system.identity();
    let mut plain = ScalarOracle { system, measure, context: e, memo: HashMap::new() };
    let plain: Vec<ExtCost<S>> = (0..n).map(|x| plain.best(x, 0, false)).collect();
    match mode {
        RelativeMode::FreeContext if context == e => Ok(plain),
        RelativeMode::FreeContext => {
            let mut o = ScalarOracle { system, measure, context, memo: HashMap::new() };
            Ok((0..n).map(|x| o.best(x, 0, true)).collect())
        }
        RelativeMode::Literal => {
            let mut o = LiteralOracle { system, measure, context, plain, memo: HashMap::new() };
            Ok((0..n).map(|x| o.best(x, 0)).collect())
        }
    }
}

pub fn oracle_simplicity<S: Scalar>(
    system: &CombinationalSystem<S>,
    measure: usize,
    x: usize,
    context: usize,
    mode: RelativeMode,
) -> Result<ExtCost<S>> {
    if x >= system.entity_count() {
        return Err(Error::UnknownEntity(x.to_string()));
    }
    Ok(oracle_table(system, measure, context, mode, DEFAULT_ORACLE_CAP)?.swap_remove(x))
}

/// Naive quadratic nondominated filter, deliberately separate from the engine's.
pub fn naive_nondominated<S: Scalar>(vectors: &[CostVector<S>]) -> Vec<CostVector<S>> {
    let mut out: Vec<CostVector<S>> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let dominated = vectors.iter().any(|u| u.dominates(v));
        let earlier_equal = vectors[..i].iter().any(|u| u == v);
        if !dominated && !earlier_equal {
            out.push(v.clone());
        }
    }
    out.sort_by(|a, b| a.lex_cmp(b));
    out
}

struct VectorOracle<'a, S> {
    system: &'a CombinationalSystem<S>,
    context: usize,
    memo: HashMap<(usize, u64, bool), Vec<CostVector<S>>>,
}

impl<S: Scalar> VectorOracle<'_, S> {
    fn cost_of_op(&self, r: &crate::system::Reaction) -> CostVector<S> {
        CostVector(
            (0..self.system.measure_count())
                .map(|m| ExtCost::from(self.system.reaction_cost(m, r.op, r.left, r.right, self.context)))
                .collect(),
        )
    }

    fn all(&mut self, x: usize, path: u64, avail: bool) -> Vec<CostVector<S>> {
        let sys = self.system;
        let k = sys.measure_count();
        if x == sys.identity() || (avail && x == self.context) {
            return vec![CostVector::zeros(k)];
        }
        if sys.is_atom(x) {
            return vec![CostVector((0..k).map(|m| ExtCost::from(sys.atom_cost(m, x).cloned())).collect())];
        }
        if let Some(v) = self.memo.get(&(x, path, avail)) {
            return v.clone();
        }
        let inner = path | (1 << x);
        let mut found = Vec::new();
        for r in sys.producers(x) {
            if inner & (1 << r.left) != 0 || inner & (1 << r.right) != 0 {
                continue;
            }
            if !sys.measures().iter().any(|m| m.uses(r.op)) {
                continue;
            }
            let c = self.cost_of_op(r);
            let mut splits = vec![(false, false)];
            if avail {
                splits.extend([(true, false), (false, true)]);
            }
            for (lw, rw) in splits {
                let ls = self.all(r.left, inner, lw);
                let rs = self.all(r.right, inner, rw);
                for a in &ls {
                    for b in &rs {
                        found.push(a.add(b).add(&c));
                    }
                }
            }
        }
        let found = naive_nondominated(&found);
        self.memo.insert((x, path, avail), found.clone());
        found
    }
}

/// Brute-force bundle of every entity relative to `context`.
pub fn oracle_bundles<S: Scalar>(
    system: &CombinationalSystem<S>,
    context: usize,
    cap: usize,
) -> Result<Vec<Vec<CostVector<S>>>> {
    check_cap(system, cap)?;
    let mut o = VectorOracle { system, context, memo: HashMap::new() };
    let avail = context != system.identity();
    Ok((0..system.entity_count())
        .map(|x| {
            let all: Vec<_> = o.all(x, 0, avail).into_iter().filter(|v| v.0.iter().any(ExtCost::is_finite)).collect();
            naive_nondominated(&all)
        })
        .collect())
}

/// One nondominated decomposition found by [`oracle_frontier`].
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRecord<S> {
    pub y: usize,
    pub z: usize,
    pub op: usize,
    pub coords: Vec<Intensity<S>>,
}

/// Multipattern frontier of `x` (free context, maximized) from enumerated
/// simplicities, scanning the raw reaction list.
pub fn oracle_frontier<S: Scalar>(
    system: &CombinationalSystem<S>,
    x: usize,
    context: usize,
    denom: Denominator,
    cap: usize,
) -> Result<Vec<OracleRecord<S>>> {
    let k = system.measure_count();
    if k < 2 {
        return Err(Error::Parameter("frontiers need at least two measures".into()));
    }
    let e = system.identity();
    if system.is_atom(x) || x == e {
        return Ok(Vec::new());
    }
    let sigma: Vec<Vec<ExtCost<S>>> = (0..k)
        .map(|m| oracle_table(system, m, context, RelativeMode::FreeContext, cap))
        .collect::<Result<_>>()?;
    let mut candidates: Vec<(usize, usize, usize)> = system
        .reactions()
        .iter()
        .filter(|r| r.products.contains(&x))
        .map(|r| (r.left, r.right, r.op))
        .collect();
    for op in 0..system.operator_count() {
        candidates.push((x, e, op));
        candidates.push((e, x, op));
    }
    let mut defined = Vec::new();
    'cand: for (y, z, op) in candidates {
        let mut coords = Vec::with_capacity(k - 1);
        for j in 1..k {
            let den = match denom {
                Denominator::Base => &sigma[0][x],
                Denominator::PerMeasure => &sigma[j][x],
            };
            let (ExtCost::Finite(num), ExtCost::Finite(den)) = (&sigma[0][x], den) else { continue 'cand };
            if den.is_zero() {
                continue 'cand;
            }
            let op_cost = ExtCost::from(system.reaction_cost(j, op, y, z, context));
            coords.push(match sigma[0][y].clone() + sigma[0][z].clone() + op_cost {
                ExtCost::Finite(h) => Intensity::Value((num.clone() - h) / den.clone()),
                ExtCost::Infinite => Intensity::NegInfinite,
            });
        }
        defined.push(OracleRecord { y, z, op, coords });
    }
    let beats = |a: &OracleRecord<S>, b: &OracleRecord<S>| {
        let ge = a.coords.iter().zip(&b.coords).all(|(p, q)| p.total_cmp(q) != Ordering::Less);
        let gt = a.coords.iter().zip(&b.coords).any(|(p, q)| p.total_cmp(q) == Ordering::Greater);
        ge && gt
    };
    let mut out: Vec<OracleRecord<S>> =
        defined.iter().filter(|r| !defined.iter().any(|o| beats(o, r))).cloned().collect();
    out.sort_by_key(|r| (r.y, r.z, r.op));
    out.dedup_by_key(|r| (r.y, r.z, r.op));
    Ok(out)
}

/// Exact transport cost by enumerating the vertices of the transportation
/// polytope: every basic solution has an acyclic support, which determines
/// the flows by peeling leaves. Supports up to 4 x 4.
pub fn oracle_transport<S: Scalar>(p: &[S], q: &[S], cost: &[Vec<S>]) -> Result<S> {
    let (m, k) = (p.len(), q.len());
    if m > 4 || k > 4 {
        return Err(Error::CapExceeded { what: "transport support", cap: 4, actual: m.max(k) });
    }
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    let mut best: Option<S> = None;
    for mask in 0u32..(1 << cells.len()) {
        let chosen: Vec<(usize, usize)> = cells
            .iter()
            .enumerate()
            .filter(|(c, _)| mask & (1 << c) != 0)
            .map(|(_, &cell)| cell)
            .collect();
        let Some(flows) = peel(p, q, &chosen) else { continue };
        let total = chosen
            .iter()
            .zip(&flows)
            .fold(S::zero(), |acc, (&(i, j), f)| acc + f.clone() * cost[i][j].clone());
        if best.as_ref().map_or(true, |b| total.total_cmp(b) == std::cmp::Ordering::Less) {
            best = Some(total);
        }
    }
    best.ok_or_else(|| Error::Parameter("distributions have different mass".into()))
}

/// Flows on an acyclic cell set meeting both marginals exactly, if any.
fn peel<S: Scalar>(p: &[S], q: &[S], cells: &[(usize, usize)]) -> Option<Vec<S>> {
    let (m, k) = (p.len(), q.len());
    let mut rest_p = p.to_vec();
    let mut rest_q = q.to_vec();
    let mut flows: Vec<Option<S>> = vec![None; cells.len()];
    let mut open = cells.len();
    while open > 0 {
        let mut progressed = false;
        for node in 0..m + k {
            let incident: Vec<usize> = (0..cells.len())
                .filter(|&c| flows[c].is_none() && if node < m { cells[c].0 == node } else { cells[c].1 == node - m })
                .collect();
            if incident.len() != 1 {
                continue;
            }
            let c = incident[0];
            let (i, j) = cells[c];
            let f = if node < m { rest_p[i].clone() } else { rest_q[j].clone() };
            if f.is_negative() {
                return None;
            }
            rest_p[i] = rest_p[i].clone() - f.clone();
            rest_q[j] = rest_q[j].clone() - f.clone();
            flows[c] = Some(f);
            open -= 1;
            progressed = true;
        }
        if !progressed {
            // a cycle remains
            return None;
        }
    }
    if rest_p.iter().chain(&rest_q).any(|r| !r.is_zero()) {
        return None;
    }
    Some(flows.into_iter().map(Option::unwrap).collect())
}
