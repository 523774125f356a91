//! Simplicity of multisets under shared derivation plans: each atom use and
//! each distinct reaction firing is paid once, and every product of a fired
//! reaction stays available for free.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::cost::{CostVector, ExtCost};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::system::CombinationalSystem;

pub const DEFAULT_EXACT_CAP: usize = 14;

/// Entity multiplicities; zero counts are not stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset(BTreeMap<usize, u64>);

impl Multiset {
    pub fn new() -> Self {
        Multiset(BTreeMap::new())
    }

    pub fn insert(&mut self, x: usize, count: u64) {
        if count > 0 {
            *self.0.entry(x).or_insert(0) += count;
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut m = Multiset::new();
        for (x, c) in pairs {
            m.insert(x, c);
        }
        m
    }

    /// Parses `"ab:1,aba:2"`; a bare id counts once.
    pub fn parse<S: Scalar>(system: &CombinationalSystem<S>, text: &str) -> Result<Self> {
        let mut m = Multiset::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (id, count) = match part.split_once(':') {
                Some((id, c)) => {
                    let c: u64 = c
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parameter(format!("bad multiplicity in `{part}`")))?;
                    (id.trim(), c)
                }
                None => (part, 1),
            };
            if count == 0 {
                return Err(Error::Parameter(format!("multiplicity must be positive in `{part}`")));
            }
            m.insert(system.entity(id)?, count);
        }
        Ok(m)
    }

    /// Multiset sum `self + other`.
    pub fn union(&self, other: &Multiset) -> Multiset {
        let mut m = self.clone();
        for (&x, &c) in &other.0 {
            m.insert(x, c);
        }
        m
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.0.iter().map(|(&x, &c)| (x, c))
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Exact,
    Greedy,
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Solver::Exact),
            "greedy" => Ok(Solver::Greedy),
            _ => Err(Error::Parameter(format!("unknown solver `{s}`"))),
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Exact => "exact",
            Solver::Greedy => "greedy",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultisetResult<S> {
    pub value: ExtCost<S>,
    /// `value` divided by the total multiplicity.
    pub normalized: ExtCost<S>,
    pub total_multiplicity: u64,
    /// True when `value` is only an upper bound.
    pub approximate: bool,
    /// Indices of the fired reactions, in firing order.
    pub plan: Vec<usize>,
}

/// A reaction usable in the measure, with its firing cost (operator plus
/// one payment per atom operand slot).
struct Firing<S> {
    reaction: usize,
    needs: u64,
    gives: u64,
    cost: S,
}

struct Plan<S> {
    bit: Vec<Option<u32>>,
    firings: Vec<Firing<S>>,
    target_bits: u64,
    fixed: S,
}

fn prepare<S: Scalar>(system: &CombinationalSystem<S>, measure: usize, targets: &Multiset) -> Result<Option<Plan<S>>> {
    if measure >= system.measure_count() {
        return Err(Error::UnknownMeasure(measure.to_string()));
    }
    let e = system.identity();
    let mut bit = vec![None; system.entity_count()];
    let mut next = 0u32;
    for x in 0..system.entity_count() {
        if x != e && !system.is_atom(x) {
            if next == 64 {
                return Err(Error::CapExceeded { what: "multiset entity", cap: 64, actual: system.entity_count() });
            }
            bit[x] = Some(next);
            next += 1;
        }
    }
    let mut fixed = S::zero();
    let mut target_bits = 0u64;
    for x in targets.support() {
        if x >= system.entity_count() {
            return Err(Error::UnknownEntity(x.to_string()));
        }
        if system.is_atom(x) {
            match system.atom_cost(measure, x) {
                Some(c) => fixed = fixed + c.clone(),
                None => return Ok(None),
            }
        } else if let Some(b) = bit[x] {
            target_bits |= 1 << b;
        }
    }
    let mut firings = Vec::new();
    for (ri, r) in system.reactions().iter().enumerate() {
        let Some(mut cost) = system.reaction_cost(measure, r.op, r.left, r.right, e) else { continue };
        let mut needs = 0u64;
        for x in [r.left, r.right] {
            match bit[x] {
                Some(b) => needs |= 1 << b,
                None => match system.atom_cost(measure, x) {
                    Some(c) => cost = cost + c.clone(),
                    None => continue,
                },
            }
        }
        let gives = r.products.iter().filter_map(|&p| bit[p]).fold(0u64, |acc, b| acc | (1 << b));
        firings.push(Firing { reaction: ri, needs, gives, cost });
    }
    Ok(Some(Plan { bit, firings, target_bits, fixed }))
}

fn finish<S: Scalar>(value: ExtCost<S>, targets: &Multiset, approximate: bool, plan: Vec<usize>) -> MultisetResult<S> {
    let total = targets.total();
    let normalized = match &value {
        ExtCost::Finite(v) if total > 0 => ExtCost::Finite(v.clone() / S::from_usize(total as usize)),
        other => other.clone(),
    };
    MultisetResult { value, normalized, total_multiplicity: total, approximate, plan }
}

struct Node<S> {
    f: S,
    g: S,
    mask: u64,
}

impl<S: Scalar> PartialEq for Node<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for Node<S> {}
impl<S: Scalar> PartialOrd for Node<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for Node<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.f.total_cmp(&other.f).then(self.mask.cmp(&other.mask))
    }
}

/// Best-first search over sets of available derived entities. The bound is
/// the most expensive single firing some unmet target still needs, which
/// never exceeds the true remaining cost.
fn exact<S: Scalar>(plan: &Plan<S>) -> (ExtCost<S>, Vec<usize>) {
    let mut cheapest: HashMap<u32, S> = HashMap::new();
    for f in &plan.firings {
        let mut g = f.gives;
        while g != 0 {
            let b = g.trailing_zeros();
            g &= g - 1;
            cheapest
                .entry(b)
                .and_modify(|c| *c = S::min_of(c.clone(), f.cost.clone()))
                .or_insert_with(|| f.cost.clone());
        }
    }
    let mut t = plan.target_bits;
    while t != 0 {
        let b = t.trailing_zeros();
        t &= t - 1;
        if !cheapest.contains_key(&b) {
            return (ExtCost::Infinite, Vec::new());
        }
    }
    let h = |mask: u64| {
        let mut unmet = plan.target_bits & !mask;
        let mut best = S::zero();
        while unmet != 0 {
            let b = unmet.trailing_zeros();
            unmet &= unmet - 1;
            best = S::max_of(best, cheapest[&b].clone());
        }
        best
    };
    let mut g_best: HashMap<u64, (S, Option<(u64, usize)>)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    g_best.insert(0, (S::zero(), None));
    heap.push(Reverse(Node { f: h(0), g: S::zero(), mask: 0 }));
    while let Some(Reverse(Node { g, mask, .. })) = heap.pop() {
        if g_best[&mask].0 != g {
            continue;
        }
        if mask & plan.target_bits == plan.target_bits {
            let mut fired = Vec::new();
            let mut cur = mask;
            while let Some((prev, fi)) = g_best[&cur].1 {
                fired.push(plan.firings[fi].reaction);
                cur = prev;
            }
            fired.reverse();
            return (ExtCost::Finite(g + plan.fixed.clone()), fired);
        }
        for (fi, f) in plan.firings.iter().enumerate() {
            if f.needs & !mask != 0 || f.gives & !mask == 0 {
                continue;
            }
            let next = mask | f.gives;
            let ng = g.clone() + f.cost.clone();
            let better = g_best.get(&next).is_none_or(|(old, _)| ng.total_cmp(old) == Ordering::Less);
            if better {
                g_best.insert(next, (ng.clone(), Some((mask, fi))));
                heap.push(Reverse(Node { f: ng.clone() + h(next), g: ng, mask: next }));
            }
        }
    }
    (ExtCost::Infinite, Vec::new())
}

/// Covers targets one at a time, each through its cheapest derivation given
/// what earlier targets already made available.
fn greedy<S: Scalar>(system: &CombinationalSystem<S>, measure: usize, plan: &Plan<S>, targets: &Multiset) -> (ExtCost<S>, Vec<usize>) {
    let n = system.entity_count();
    let e = system.identity();
    let mut available = 0u64;
    let mut fired: Vec<usize> = Vec::new();
    let mut fired_set = BTreeSet::new();
    let mut total = plan.fixed.clone();
    let order: Vec<usize> = targets.support().filter(|&x| plan.bit[x].is_some()).collect();
    for x in order {
        let b = plan.bit[x].unwrap();
        if available & (1 << b) != 0 {
            continue;
        }
        // Bellman-Ford with available entities free
        let mut d: Vec<Option<S>> = vec![None; n];
        let mut via: Vec<Option<usize>> = vec![None; n];
        d[e] = Some(S::zero());
        for y in 0..n {
            if system.is_atom(y) {
                d[y] = system.atom_cost(measure, y).cloned();
            } else if plan.bit[y].is_some_and(|b| available & (1 << b) != 0) {
                d[y] = Some(S::zero());
            }
        }
        loop {
            let mut changed = false;
            for (ri, r) in system.reactions().iter().enumerate() {
                let Some(c) = system.reaction_cost(measure, r.op, r.left, r.right, e) else { continue };
                let (Some(l), Some(rr)) = (&d[r.left], &d[r.right]) else { continue };
                let cand = l.clone() + rr.clone() + c;
                for &p in &r.products {
                    if d[p].as_ref().is_none_or(|old| cand.total_cmp(old) == Ordering::Less) {
                        d[p] = Some(cand.clone());
                        via[p] = Some(ri);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if d[x].is_none() {
            return (ExtCost::Infinite, fired);
        }
        let mut stack = vec![x];
        let mut seen = BTreeSet::new();
        let mut tree = Vec::new();
        while let Some(y) = stack.pop() {
            if !seen.insert(y) {
                continue;
            }
            if plan.bit[y].is_some_and(|b| available & (1 << b) != 0) {
                continue;
            }
            if let Some(ri) = via[y] {
                let r = &system.reactions()[ri];
                tree.push(ri);
                stack.push(r.left);
                stack.push(r.right);
            }
        }
        tree.reverse();
        for ri in tree {
            if fired_set.insert(ri) {
                let f = plan.firings.iter().find(|f| f.reaction == ri).expect("usable firing");
                total = total + f.cost.clone();
                available |= f.gives;
                fired.push(ri);
            }
        }
    }
    (ExtCost::Finite(total), fired)
}

pub fn multiset_simplicity<S: Scalar>(
    system: &CombinationalSystem<S>,
    measure: usize,
    targets: &Multiset,
    solver: Solver,
    cap: usize,
) -> Result<MultisetResult<S>> {
    if solver == Solver::Exact && system.entity_count() > cap {
        return Err(Error::CapExceeded { what: "exact multiset entity", cap, actual: system.entity_count() });
    }
    let Some(plan) = prepare(system, measure, targets)? else {
        return Ok(finish(ExtCost::Infinite, targets, solver == Solver::Greedy, Vec::new()));
    };
    let (value, fired) = match solver {
        Solver::Exact => exact(&plan),
        Solver::Greedy => greedy(system, measure, &plan, targets),
    };
    Ok(finish(value, targets, solver == Solver::Greedy, fired))
}

/// Per-measure exact multiset costs.
pub fn vector_multiset_simplicity<S: Scalar>(
    system: &CombinationalSystem<S>,
    targets: &Multiset,
    cap: usize,
) -> Result<CostVector<S>> {
    let costs = (0..system.measure_count())
        .map(|m| multiset_simplicity(system, m, targets, Solver::Exact, cap).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(CostVector(costs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::Rational;

    fn q(n: i64, d: i64) -> ExtCost<Rational> {
        ExtCost::Finite(Rational::new(n.into(), d.into()))
    }

    #[test]
    fn toy1_examples() {
        let sys = fixtures::toy1();
        let run = |text: &str| {
            let m = Multiset::parse(&sys, text).unwrap();
            multiset_simplicity(&sys, 0, &m, Solver::Exact, DEFAULT_EXACT_CAP).unwrap()
        };
        assert_eq!(run("ab:1").value, q(3, 1));
        let both = run("ab:1,aba:1");
        assert_eq!(both.value, q(5, 1));
        assert_eq!(both.normalized, q(5, 2));
        assert_eq!(both.plan.len(), 2);
        let dup = run("ab:2");
        assert_eq!(dup.value, q(3, 1));
        assert_eq!(dup.normalized, q(3, 2));
        assert_eq!(run("a:3,b").value, q(2, 1));
    }

    #[test]
    fn sharing_beats_tree_cost() {
        let sys = fixtures::toy2();
        let m = Multiset::parse(&sys, "aaaa").unwrap();
        let r = multiset_simplicity(&sys, 0, &m, Solver::Exact, DEFAULT_EXACT_CAP).unwrap();
        // a + a + cat(a,a) once, then cat(aa,aa) reuses aa
        assert_eq!(r.value, q(4, 1));
    }

    #[test]
    fn greedy_is_an_upper_bound() {
        for sys in [fixtures::toy1(), fixtures::toy2()] {
            let names: Vec<String> = sys.entities().to_vec();
            for x in &names {
                for y in &names {
                    let m = Multiset::parse(&sys, &format!("{x},{y}")).unwrap();
                    let ex = multiset_simplicity(&sys, 0, &m, Solver::Exact, DEFAULT_EXACT_CAP).unwrap();
                    let gr = multiset_simplicity(&sys, 0, &m, Solver::Greedy, DEFAULT_EXACT_CAP).unwrap();
                    assert!(ex.value.le(&gr.value));
                    assert!(gr.approximate && !ex.approximate);
                }
            }
        }
    }

    #[test]
    fn cap_and_parse_errors() {
        let sys = fixtures::str1();
        let m = Multiset::parse(&sys, "aa").unwrap();
        assert_eq!(multiset_simplicity(&sys, 0, &m, Solver::Exact, 14).unwrap_err().code(), "cap-exceeded");
        assert!(multiset_simplicity(&sys, 0, &m, Solver::Greedy, 14).is_ok());
        assert!(Multiset::parse(&sys, "aa:0").is_err());
        assert!(Multiset::parse(&sys, "zz").is_err());
    }
}
