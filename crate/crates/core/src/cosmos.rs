//! Multi-measure simplicity: Pareto bundles of per-measure cost vectors.

use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::cost::{CostVector, ExtCost};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::system::{CombinationalSystem, Reaction};

pub const DEFAULT_LABEL_CAP: usize = 64;

/// A canonical, mutually nondominated set of cost vectors.
pub type Bundle<S> = Vec<CostVector<S>>;

/// Drops dominated vectors and duplicates; output in lexicographic order.
pub fn pareto_filter<S: Scalar>(vectors: Vec<CostVector<S>>) -> Result<Bundle<S>> {
    if let Some(first) = vectors.first() {
        if let Some(bad) = vectors.iter().find(|v| v.len() != first.len()) {
            return Err(Error::MixedLengths(first.len(), bad.len()));
        }
    }
    let mut sorted = vectors;
    sorted.sort_by(|a, b| a.lex_cmp(b));
    sorted.dedup_by(|a, b| a.lex_cmp(b) == Ordering::Equal);
    // a vector can only be dominated by one that sorts before it
    let mut kept: Vec<CostVector<S>> = Vec::with_capacity(sorted.len());
    for v in sorted {
        if !kept.iter().any(|k| k.dominates(&v)) {
            kept.push(v);
        }
    }
    Ok(kept)
}

/// `A <= B` in the set sense: every member of `A` weakly dominates every member of `B`.
pub fn bundle_dominates<S: Scalar>(a: &[CostVector<S>], b: &[CostVector<S>]) -> Result<bool> {
    let len = a.first().or(b.first()).map(CostVector::len);
    if let Some(len) = len {
        if let Some(bad) = a.iter().chain(b).find(|v| v.len() != len) {
            return Err(Error::MixedLengths(len, bad.len()));
        }
    }
    Ok(a.iter().all(|s| b.iter().all(|t| s.weakly_dominates(t))))
}

/// Every point of `b` is weakly dominated by some point of `a`.
pub fn covers<S: Scalar>(a: &[CostVector<S>], b: &[CostVector<S>]) -> bool {
    b.iter().all(|t| a.iter().any(|s| s.weakly_dominates(t)))
}

/// Pareto-filtered Minkowski sum.
pub fn minkowski_sum<S: Scalar>(a: &[CostVector<S>], b: &[CostVector<S>]) -> Result<Bundle<S>> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            if x.len() != y.len() {
                return Err(Error::MixedLengths(x.len(), y.len()));
            }
            out.push(x.add(y));
        }
    }
    pareto_filter(out)
}

/// Componentwise minimum of a bundle (its ideal point).
pub fn ideal_point<S: Scalar>(bundle: &[CostVector<S>]) -> Option<CostVector<S>> {
    let first = bundle.first()?.clone();
    Some(bundle[1..].iter().fold(first, |acc, v| {
        CostVector(acc.0.into_iter().zip(&v.0).map(|(a, b)| a.min(b.clone())).collect())
    }))
}

/// Per-measure cost vector of one auto-op from `context`; infinite where
/// the operator lies outside the measure.
pub fn reaction_vector<S: Scalar>(
    system: &CombinationalSystem<S>,
    r: &Reaction,
    context: usize,
) -> CostVector<S> {
    CostVector(
        (0..system.measure_count())
            .map(|m| ExtCost::from(system.reaction_cost(m, r.op, r.left, r.right, context)))
            .collect(),
    )
}

pub fn atom_vector<S: Scalar>(system: &CombinationalSystem<S>, atom: usize) -> CostVector<S> {
    CostVector(
        (0..system.measure_count())
            .map(|m| ExtCost::from(system.atom_cost(m, atom).cloned()))
            .collect(),
    )
}

fn all_infinite<S: Scalar>(v: &CostVector<S>) -> bool {
    v.0.iter().all(|c| !c.is_finite())
}

/// Bundles of every entity relative to one context.
#[derive(Clone, Debug)]
pub struct BundleTable<S> {
    pub context: usize,
    bundles: Vec<Bundle<S>>,
}

impl<S: Scalar> BundleTable<S> {
    pub fn bundle(&self, x: usize) -> &Bundle<S> {
        &self.bundles[x]
    }

    pub fn bundles(&self) -> &[Bundle<S>] {
        &self.bundles
    }
}

/// Merges `cands` into `set`, returning whether anything changed.
fn merge<S: Scalar>(set: &mut Vec<CostVector<S>>, cands: Vec<CostVector<S>>) -> bool {
    let mut changed = false;
    for c in cands {
        if set.iter().any(|s| s.weakly_dominates(&c)) {
            continue;
        }
        set.retain(|s| !c.dominates(s));
        set.push(c);
        changed = true;
    }
    changed
}

fn sums<S: Scalar>(a: &[CostVector<S>], b: &[CostVector<S>], c: &CostVector<S>, out: &mut Vec<CostVector<S>>) {
    for x in a {
        for y in b {
            out.push(x.add(y).add(c));
        }
    }
}

/// Label-correcting search with per-entity nondominated label sets. Labels of
/// layer 0 never touch the context; layer 1 labels consume it exactly once.
pub fn bundle_table<S: Scalar>(
    system: &CombinationalSystem<S>,
    context: usize,
    cap: usize,
) -> Result<BundleTable<S>> {
    if context >= system.entity_count() {
        return Err(Error::UnknownEntity(context.to_string()));
    }
    let n = system.entity_count();
    let k = system.measure_count();
    let e = system.identity();
    let mut labels: [Vec<Vec<CostVector<S>>>; 2] = [vec![Vec::new(); n], vec![Vec::new(); n]];
    let mut queue = VecDeque::new();
    let mut queued = [vec![false; n], vec![false; n]];
    labels[0][e].push(CostVector::zeros(k));
    queue.push_back((e, 0));
    queued[0][e] = true;
    for a in system.atoms() {
        labels[0][a].push(atom_vector(system, a));
        queue.push_back((a, 0));
        queued[0][a] = true;
    }
    if context != e {
        labels[1][context].push(CostVector::zeros(k));
        queue.push_back((context, 1));
        queued[1][context] = true;
    }
    let usable: Vec<bool> = (0..system.operator_count())
        .map(|op| system.measures().iter().any(|m| m.uses(op)))
        .collect();
    while let Some((x, layer)) = queue.pop_front() {
        queued[layer][x] = false;
        for &ri in system.consumers(x) {
            let r = &system.reactions()[ri];
            if !usable[r.op] {
                continue;
            }
            let c = reaction_vector(system, r, context);
            let mut plain = Vec::new();
            sums(&labels[0][r.left], &labels[0][r.right], &c, &mut plain);
            let mut once = Vec::new();
            sums(&labels[1][r.left], &labels[0][r.right], &c, &mut once);
            sums(&labels[0][r.left], &labels[1][r.right], &c, &mut once);
            for &p in &r.products {
                for (l, cands) in [(0, plain.clone()), (1, once.clone())] {
                    if merge(&mut labels[l][p], cands) {
                        if labels[l][p].len() > cap {
                            return Err(Error::CapExceeded { what: "bundle label", cap, actual: labels[l][p].len() });
                        }
                        if !queued[l][p] {
                            queued[l][p] = true;
                            queue.push_back((p, l));
                        }
                    }
                }
            }
        }
    }
    let [plain, once] = labels;
    let bundles = plain
        .into_iter()
        .zip(once)
        .map(|(mut a, b)| {
            a.extend(b);
            a.retain(|v| !all_infinite(v));
            pareto_filter(a)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BundleTable { context, bundles })
}

/// `bundle(x | w)`.
pub fn bundle<S: Scalar>(system: &CombinationalSystem<S>, x: usize, w: usize) -> Result<Bundle<S>> {
    if x >= system.entity_count() {
        return Err(Error::UnknownEntity(x.to_string()));
    }
    Ok(bundle_table(system, w, DEFAULT_LABEL_CAP)?.bundles[x].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::Rational;

    fn v(xs: &[i64]) -> CostVector<Rational> {
        CostVector(xs.iter().map(|&x| ExtCost::Finite(Rational::from_integer(x.into()))).collect())
    }

    #[test]
    fn pareto_filter_cases() {
        assert_eq!(pareto_filter(vec![v(&[1, 2]), v(&[2, 1]), v(&[2, 2])]).unwrap(), vec![v(&[1, 2]), v(&[2, 1])]);
        assert_eq!(pareto_filter(vec![v(&[1, 1]), v(&[1, 1])]).unwrap(), vec![v(&[1, 1])]);
        assert_eq!(pareto_filter(vec![v(&[3])]).unwrap(), vec![v(&[3])]);
        assert_eq!(pareto_filter(vec![v(&[1]), v(&[1, 2])]).unwrap_err().code(), "mixed-lengths");
    }

    #[test]
    fn bundle_dominates_cases() {
        assert!(bundle_dominates(&[v(&[1, 1])], &[v(&[2, 2])]).unwrap());
        assert!(!bundle_dominates(&[v(&[1, 3])], &[v(&[2, 2])]).unwrap());
        assert!(bundle_dominates(&[v(&[2, 2])], &[v(&[2, 2])]).unwrap());
    }

    #[test]
    fn toy2_frontier() {
        let sys = fixtures::toy2();
        let aaaa = sys.entity("aaaa").unwrap();
        let b = bundle(&sys, aaaa, sys.identity()).unwrap();
        assert_eq!(b, vec![v(&[7, 10]), v(&[9, 9])]);
        assert_eq!(bundle(&sys, sys.identity(), sys.identity()).unwrap(), vec![v(&[0, 0])]);
    }

    #[test]
    fn single_measure_bundle_is_the_simplicity() {
        let sys = fixtures::toy1();
        let aba = sys.entity("aba").unwrap();
        assert_eq!(bundle(&sys, aba, sys.identity()).unwrap(), vec![v(&[5])]);
        let ab = sys.entity("ab").unwrap();
        assert_eq!(bundle(&sys, aba, ab).unwrap(), vec![v(&[2])]);
    }

    #[test]
    fn ideal_point_is_componentwise_min() {
        assert_eq!(ideal_point(&[v(&[7, 10]), v(&[9, 9])]), Some(v(&[7, 9])));
    }
}
