//! Intensions, extensions and the distance tables built on them.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::structure::SubpatternGraph;

/// Symmetric entity-indexed distance table.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricTable<S> {
    pub construction: String,
    pub alpha: Option<S>,
    n: usize,
    values: Vec<S>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MetricViolation {
    Diagonal(usize),
    Asymmetric(usize, usize),
    Negative(usize, usize),
    Triangle(usize, usize, usize),
}

impl<S: Scalar> MetricTable<S> {
    /// Fills the table from `d(x, y)` for `x < y`, in parallel.
    pub fn from_fn<F>(construction: impl Into<String>, n: usize, d: F) -> Self
    where
        F: Fn(usize, usize) -> S + Sync,
    {
        let upper: Vec<Vec<S>> = (0..n)
            .into_par_iter()
            .map(|x| (x + 1..n).map(|y| d(x, y)).collect())
            .collect();
        let mut values = vec![S::zero(); n * n];
        for (x, row) in upper.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                let y = x + 1 + k;
                values[x * n + y] = v.clone();
                values[y * n + x] = v;
            }
        }
        MetricTable { construction: construction.into(), alpha: None, n, values }
    }

    /// A table taken as given, without symmetrizing.
    pub fn from_rows(construction: impl Into<String>, rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Parameter("metric table must be square".into()));
        }
        Ok(MetricTable { construction: construction.into(), alpha: None, n, values: rows.into_iter().flatten().collect() })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, x: usize, y: usize) -> &S {
        &self.values[x * self.n + y]
    }

    pub fn rows(&self) -> Vec<Vec<S>> {
        self.values.chunks(self.n.max(1)).map(<[S]>::to_vec).collect()
    }

    /// Applies `f` to every cell, keeping the construction label.
    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        MetricTable { construction: self.construction.clone(), alpha: self.alpha.clone(), n: self.n, values: self.values.iter().map(f).collect() }
    }

    /// Largest `|a - b|` over all cells.
    pub fn sup_distance(&self, other: &Self) -> S {
        self.values
            .iter()
            .zip(&other.values)
            .fold(S::zero(), |acc, (a, b)| S::max_of(acc, (a.clone() - b.clone()).abs()))
    }

    /// Exhaustive pseudometric check.
    pub fn violations(&self) -> Vec<MetricViolation> {
        let n = self.n;
        let mut out = Vec::new();
        for x in 0..n {
            if !self.get(x, x).is_zero() {
                out.push(MetricViolation::Diagonal(x));
            }
            for y in 0..n {
                if self.get(x, y).is_negative() {
                    out.push(MetricViolation::Negative(x, y));
                }
                if x < y && self.get(x, y) != self.get(y, x) {
                    out.push(MetricViolation::Asymmetric(x, y));
                }
            }
        }
        let triangles: Vec<Vec<MetricViolation>> = (0..n)
            .into_par_iter()
            .map(|x| {
                let mut v = Vec::new();
                for y in 0..n {
                    for z in 0..n {
                        let via = self.get(x, y).clone() + self.get(y, z).clone();
                        if self.get(x, z).total_cmp(&via) == Ordering::Greater {
                            v.push(MetricViolation::Triangle(x, y, z));
                        }
                    }
                }
                v
            })
            .collect();
        out.extend(triangles.into_iter().flatten());
        out
    }
}

/// `1 - |A n B| / |A u B|` on sorted, deduplicated sets; 0 for two empty sets.
pub fn tanimoto<S: Scalar>(a: &[usize], b: &[usize]) -> S {
    let (mut i, mut j, mut both) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                both += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - both;
    if union == 0 {
        return S::zero();
    }
    S::one() - S::from_usize(both) / S::from_usize(union)
}

/// `(int(x), ext(x))`.
pub fn intension_extension<S: Scalar>(graph: &SubpatternGraph<S>, x: usize) -> (Vec<usize>, Vec<usize>) {
    (graph.intension(x), graph.extension(x))
}

pub fn check_alpha<S: Scalar>(alpha: &S) -> Result<()> {
    if alpha.is_negative() || alpha.total_cmp(&S::one()) == Ordering::Greater {
        return Err(Error::Parameter(format!("alpha must lie in [0,1], got {}", alpha.to_exact_string())));
    }
    Ok(())
}

/// Pointwise `alpha * a + (1 - alpha) * b`.
pub fn combine<S: Scalar>(a: &MetricTable<S>, b: &MetricTable<S>, alpha: &S) -> Result<MetricTable<S>> {
    check_alpha(alpha)?;
    if a.n != b.n {
        return Err(Error::Parameter("metric tables differ in size".into()));
    }
    let beta = S::one() - alpha.clone();
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| alpha.clone() * x.clone() + beta.clone() * y.clone())
        .collect();
    Ok(MetricTable { construction: "composite".into(), alpha: Some(alpha.clone()), n: a.n, values })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TanimotoMetrics<S> {
    pub intensional: MetricTable<S>,
    pub extensional: MetricTable<S>,
    pub composite: MetricTable<S>,
}

pub fn intensional_metric<S: Scalar>(graph: &SubpatternGraph<S>) -> MetricTable<S> {
    let ints: Vec<Vec<usize>> = (0..graph.entity_count()).map(|x| graph.intension(x)).collect();
    MetricTable::from_fn("intensional", ints.len(), |x, y| tanimoto(&ints[x], &ints[y]))
}

pub fn extensional_metric<S: Scalar>(graph: &SubpatternGraph<S>) -> MetricTable<S> {
    let exts: Vec<Vec<usize>> = (0..graph.entity_count()).map(|x| graph.extension(x)).collect();
    MetricTable::from_fn("extensional", exts.len(), |x, y| tanimoto(&exts[x], &exts[y]))
}

pub fn tanimoto_metrics<S: Scalar>(graph: &SubpatternGraph<S>, alpha: &S) -> Result<TanimotoMetrics<S>> {
    check_alpha(alpha)?;
    let intensional = intensional_metric(graph);
    let extensional = extensional_metric(graph);
    let composite = combine(&intensional, &extensional, alpha)?;
    Ok(TanimotoMetrics { intensional, extensional, composite })
}

/// Normalized, clipped `Q(y, x)` over `ext(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QDistribution<S> {
    pub x: usize,
    /// Positive-mass entries in entity order.
    pub support: Vec<(usize, S)>,
    /// Every `Q` was zero, so the mass was spread uniformly over `ext(x)`.
    pub degenerate: bool,
}

pub fn q_distribution<S: Scalar>(graph: &SubpatternGraph<S>, x: usize) -> QDistribution<S> {
    let ext = graph.extension(x);
    let clipped: Vec<(usize, S)> = ext
        .iter()
        .map(|&y| {
            let q = graph.q(y, x).and_then(|q| q.value().cloned()).unwrap_or_else(S::zero);
            (y, S::max_of(q, S::zero()))
        })
        .collect();
    let total = clipped.iter().fold(S::zero(), |acc, (_, q)| acc + q.clone());
    if total.is_zero() {
        let share = S::one() / S::from_usize(ext.len());
        return QDistribution { x, support: ext.into_iter().map(|y| (y, share.clone())).collect(), degenerate: true };
    }
    QDistribution {
        x,
        support: clipped
            .into_iter()
            .filter(|(_, q)| !q.is_zero())
            .map(|(y, q)| (y, q / total.clone()))
            .collect(),
        degenerate: false,
    }
}

#[derive(Clone, Debug)]
struct Arc<S> {
    to: usize,
    cap: Option<S>,
    flow: S,
    cost: S,
}

/// Exact min-cost flow by successive shortest paths (Bellman-Ford), for the
/// bipartite transport problem between two distributions.
fn transport<S: Scalar>(p: &[S], q: &[S], cost: &[Vec<S>]) -> S {
    let (m, k) = (p.len(), q.len());
    let source = m + k;
    let sink = source + 1;
    let nodes = sink + 1;
    let mut arcs: Vec<Arc<S>> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut add = |from: usize, to: usize, cap: Option<S>, cost: S, arcs: &mut Vec<Arc<S>>| {
        adj[from].push(arcs.len());
        arcs.push(Arc { to, cap, flow: S::zero(), cost: cost.clone() });
        adj[to].push(arcs.len());
        arcs.push(Arc { to: from, cap: Some(S::zero()), flow: S::zero(), cost: -cost });
    };
    for (i, pi) in p.iter().enumerate() {
        add(source, i, Some(pi.clone()), S::zero(), &mut arcs);
    }
    for (j, qj) in q.iter().enumerate() {
        add(m + j, sink, Some(qj.clone()), S::zero(), &mut arcs);
    }
    for i in 0..m {
        for j in 0..k {
            add(i, m + j, None, cost[i][j].clone(), &mut arcs);
        }
    }
    let residual = |a: &Arc<S>| a.cap.as_ref().map(|c| c.clone() - a.flow.clone());
    let mut total = S::zero();
    loop {
        let mut dist: Vec<Option<S>> = vec![None; nodes];
        let mut via: Vec<Option<usize>> = vec![None; nodes];
        dist[source] = Some(S::zero());
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                let Some(du) = dist[u].clone() else { continue };
                for &ai in &adj[u] {
                    let a = &arcs[ai];
                    if residual(a).is_some_and(|r| !r.is_positive()) {
                        continue;
                    }
                    let nd = du.clone() + a.cost.clone();
                    if dist[a.to].as_ref().map_or(true, |d| nd.total_cmp(d) == Ordering::Less) {
                        dist[a.to] = Some(nd);
                        via[a.to] = Some(ai);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink].is_none() {
            return total;
        }
        let mut path = Vec::new();
        let mut v = sink;
        while v != source {
            let ai = via[v].expect("path");
            path.push(ai);
            v = arcs[ai ^ 1].to;
        }
        let push = path
            .iter()
            .filter_map(|&ai| residual(&arcs[ai]))
            .reduce(S::min_of)
            .expect("source arcs are capacitated");
        for &ai in &path {
            arcs[ai].flow = arcs[ai].flow.clone() + push.clone();
            arcs[ai ^ 1].flow = arcs[ai ^ 1].flow.clone() - push.clone();
            total = total + push.clone() * arcs[ai].cost.clone();
        }
    }
}

/// Kantorovich distance between two distributions over `ground`.
pub fn hutchinson_distance<S: Scalar>(p: &QDistribution<S>, q: &QDistribution<S>, ground: &MetricTable<S>) -> Result<S> {
    for &(y, _) in p.support.iter().chain(&q.support) {
        if y >= ground.len() {
            return Err(Error::UnknownEntity(y.to_string()));
        }
    }
    let pm: Vec<S> = p.support.iter().map(|(_, m)| m.clone()).collect();
    let qm: Vec<S> = q.support.iter().map(|(_, m)| m.clone()).collect();
    let cost: Vec<Vec<S>> = p
        .support
        .iter()
        .map(|(a, _)| q.support.iter().map(|(b, _)| ground.get(*a, *b).clone()).collect())
        .collect();
    Ok(transport(&pm, &qm, &cost))
}

pub fn q_distributions<S: Scalar>(graph: &SubpatternGraph<S>) -> Vec<QDistribution<S>> {
    (0..graph.entity_count()).map(|x| q_distribution(graph, x)).collect()
}

pub fn hutchinson_metric<S: Scalar>(graph: &SubpatternGraph<S>, ground: &MetricTable<S>) -> Result<MetricTable<S>> {
    if ground.len() != graph.entity_count() {
        return Err(Error::Parameter("ground metric does not cover the graph".into()));
    }
    let dists = q_distributions(graph);
    Ok(MetricTable::from_fn("hutchinson", dists.len(), |x, y| {
        hutchinson_distance(&dists[x], &dists[y], ground).expect("supports are graph entities")
    }))
}

/// Pearson statistics over off-diagonal pairs, kept exact: `r^2` and the
/// sign of the covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlation<S> {
    pub pairs: usize,
    pub covariance: S,
    /// `None` when either table is constant.
    pub r_squared: Option<S>,
}

pub fn correlation<S: Scalar>(a: &MetricTable<S>, b: &MetricTable<S>) -> Correlation<S> {
    let n = a.len().min(b.len());
    let pairs: Vec<(S, S)> = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .map(|(x, y)| (a.get(x, y).clone(), b.get(x, y).clone()))
        .collect();
    if pairs.is_empty() {
        return Correlation { pairs: 0, covariance: S::zero(), r_squared: None };
    }
    let k = S::from_usize(pairs.len());
    let mean = |f: &dyn Fn(&(S, S)) -> S| pairs.iter().fold(S::zero(), |acc, p| acc + f(p)) / k.clone();
    let (ma, mb) = (mean(&|p| p.0.clone()), mean(&|p| p.1.clone()));
    let cov = mean(&|p| (p.0.clone() - ma.clone()) * (p.1.clone() - mb.clone()));
    let va = mean(&|p| (p.0.clone() - ma.clone()) * (p.0.clone() - ma.clone()));
    let vb = mean(&|p| (p.1.clone() - mb.clone()) * (p.1.clone() - mb.clone()));
    let r_squared = if va.is_zero() || vb.is_zero() { None } else { Some(cov.clone() * cov.clone() / (va * vb)) };
    Correlation { pairs: pairs.len(), covariance: cov, r_squared }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::structure::{subpattern_graph, PositionPolicy};
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn tanimoto_values() {
        assert_eq!(tanimoto::<Rational>(&[1, 2], &[2, 3]), q(2, 3));
        assert_eq!(tanimoto::<Rational>(&[], &[]), q(0, 1));
        assert_eq!(tanimoto::<Rational>(&[], &[4]), q(1, 1));
        assert_eq!(tanimoto::<Rational>(&[1, 4], &[1, 4]), q(0, 1));
    }

    #[test]
    fn str1_tables() {
        let sys = fixtures::str1();
        let g = subpattern_graph(&sys, sys.identity(), PositionPolicy::LeftOnly).unwrap();
        let a4 = sys.entity("aaaa").unwrap();
        let a8 = sys.entity("aaaaaaaa").unwrap();
        let (_, ext) = intension_extension(&g, a8);
        assert!(ext.contains(&a4));
        let e = sys.identity();
        assert_eq!(intension_extension(&g, e), (vec![e], vec![e]));
        let m = tanimoto_metrics(&g, &q(1, 2)).unwrap();
        for t in [&m.intensional, &m.extensional, &m.composite] {
            assert!(t.violations().is_empty());
        }
        let only_int = tanimoto_metrics(&g, &q(1, 1)).unwrap();
        assert_eq!(only_int.composite.rows(), only_int.intensional.rows());
        let h = hutchinson_metric(&g, &m.composite).unwrap();
        assert!(h.violations().is_empty());
        assert!(tanimoto_metrics(&g, &q(3, 2)).is_err());
    }

    #[test]
    fn q_distribution_cases() {
        let sys = fixtures::str1();
        let g = subpattern_graph(&sys, sys.identity(), PositionPolicy::LeftOnly).unwrap();
        let ab = sys.entity("ab").unwrap();
        let d = q_distribution(&g, ab);
        assert!(d.degenerate);
        assert_eq!(d.support, vec![(ab, q(1, 1))]);
        let a8 = sys.entity("aaaaaaaa").unwrap();
        let d = q_distribution(&g, a8);
        assert!(!d.degenerate);
        assert_eq!(d.support.iter().fold(q(0, 1), |acc, (_, m)| acc + m.clone()), q(1, 1));
    }

    #[test]
    fn transport_examples() {
        let ground = MetricTable::from_rows("t", vec![vec![q(0, 1), q(2, 3)], vec![q(2, 3), q(0, 1)]]).unwrap();
        let dist = |xs: &[(usize, Rational)]| QDistribution { x: 0, support: xs.to_vec(), degenerate: false };
        let p = dist(&[(0, q(1, 2)), (1, q(1, 2))]);
        let pt = dist(&[(0, q(1, 1))]);
        assert_eq!(hutchinson_distance(&p, &pt, &ground).unwrap(), q(1, 3));
        assert_eq!(hutchinson_distance(&p, &p, &ground).unwrap(), q(0, 1));
        assert_eq!(hutchinson_distance(&pt, &dist(&[(1, q(1, 1))]), &ground).unwrap(), q(2, 3));
        assert!(hutchinson_distance(&p, &dist(&[(5, q(1, 1))]), &ground).is_err());
    }
}
