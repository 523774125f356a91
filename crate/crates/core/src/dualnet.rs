//! Lossy multipattern frontiers, fuzzy intensions, LMI distance and dual
//! network coherence.

use std::cmp::Ordering;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cost::Intensity;
use crate::error::{Error, Result};
use crate::metric::{combine, MetricTable};
use crate::pattern::{Denominator, PatternEngine};
use crate::scalar::Scalar;

/// One explicit reaction output scored against a target.
#[derive(Clone, Debug, PartialEq)]
pub struct LossyRecord<S> {
    pub reaction: usize,
    pub y: usize,
    pub z: usize,
    pub op: usize,
    pub output: usize,
    /// Intensity coordinates toward the target, then one proximity
    /// `k / (k + d(output, target))` per metric.
    pub objectives: Vec<Intensity<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossyFrontier<S> {
    pub target: usize,
    pub context: usize,
    pub k: S,
    pub members: Vec<LossyRecord<S>>,
}

fn dominates<S: Scalar>(a: &[Intensity<S>], b: &[Intensity<S>]) -> bool {
    let ords: Vec<Ordering> = a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).collect();
    ords.iter().all(|o| *o != Ordering::Less) && ords.iter().any(|o| *o == Ordering::Greater)
}

pub fn proximity<S: Scalar>(k: &S, d: &S) -> S {
    k.clone() / (k.clone() + d.clone())
}

fn check_k<S: Scalar>(k: &S) -> Result<()> {
    if !k.is_positive() {
        return Err(Error::Parameter(format!("k must be positive, got {}", k.to_exact_string())));
    }
    Ok(())
}

/// Every `(reaction, output)` pair of the system, in reaction order.
pub fn legal_records<S: Scalar>(engine: &PatternEngine<'_, S>) -> Vec<(usize, usize)> {
    engine
        .system()
        .reactions()
        .iter()
        .enumerate()
        .flat_map(|(ri, r)| r.products.iter().map(move |&o| (ri, o)))
        .collect()
}

/// Scores every legal record toward `x`; records whose intensity toward `x`
/// is undefined are dropped.
pub fn lossy_records<S: Scalar>(
    engine: &PatternEngine<'_, S>,
    x: usize,
    k: &S,
    metrics: &[&MetricTable<S>],
    denom: Denominator,
) -> Result<Vec<LossyRecord<S>>> {
    check_k(k)?;
    let sys = engine.system();
    if sys.measure_count() < 2 {
        return Err(Error::Parameter("lossy frontiers need two measures".into()));
    }
    for m in metrics {
        if m.len() != sys.entity_count() {
            return Err(Error::Parameter("metric does not cover every entity".into()));
        }
    }
    let mut out = Vec::new();
    'records: for (ri, o) in legal_records(engine) {
        let r = &sys.reactions()[ri];
        let mut objectives = Vec::with_capacity(sys.measure_count() - 1 + metrics.len());
        for j in 1..sys.measure_count() {
            match engine.coordinate(0, j, r.left, r.right, r.op, x, denom) {
                Ok(v) => objectives.push(v),
                Err(_) => continue 'records,
            }
        }
        for m in metrics {
            objectives.push(Intensity::Value(proximity(k, m.get(o, x))));
        }
        out.push(LossyRecord { reaction: ri, y: r.left, z: r.right, op: r.op, output: o, objectives });
    }
    Ok(out)
}

pub fn lossy_frontier<S: Scalar>(
    engine: &PatternEngine<'_, S>,
    x: usize,
    k: &S,
    metrics: &[&MetricTable<S>],
    denom: Denominator,
) -> Result<LossyFrontier<S>> {
    let records = lossy_records(engine, x, k, metrics, denom)?;
    let members = records
        .iter()
        .filter(|r| !records.iter().any(|o| dominates(&o.objectives, &r.objectives)))
        .cloned()
        .collect();
    Ok(LossyFrontier { target: x, context: engine.context(), k: k.clone(), members })
}

/// How a record's distance to the frontier becomes a membership degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Polarity {
    /// `1 - distance`, floored at 0.
    #[default]
    Similarity,
    /// The distance itself, capped at 1.
    Distance,
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "similarity" => Ok(Polarity::Similarity),
            "distance" => Ok(Polarity::Distance),
            _ => Err(Error::Parameter(format!("unknown polarity `{s}`"))),
        }
    }
}

/// Memberships over the legal records, indexed like [`legal_records`].
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzySet<S> {
    pub memberships: Vec<S>,
    /// The frontier was empty, so every membership is 0.
    pub empty_frontier: bool,
}

pub fn lmi_intension<S: Scalar>(
    records: &[(usize, usize)],
    frontier: &LossyFrontier<S>,
    base: &MetricTable<S>,
    polarity: Polarity,
) -> FuzzySet<S> {
    if frontier.members.is_empty() {
        return FuzzySet { memberships: vec![S::zero(); records.len()], empty_frontier: true };
    }
    let memberships = records
        .iter()
        .map(|&(_, o)| {
            let nearest = frontier
                .members
                .iter()
                .map(|f| base.get(o, f.output).clone())
                .reduce(S::min_of)
                .expect("nonempty frontier");
            match polarity {
                Polarity::Similarity => S::max_of(S::one() - nearest, S::zero()),
                Polarity::Distance => S::min_of(nearest, S::one()),
            }
        })
        .collect();
    FuzzySet { memberships, empty_frontier: false }
}

/// `1 - sum(min) / sum(max)`, with `0/0` read as distance 0.
pub fn fuzzy_tanimoto<S: Scalar>(a: &[S], b: &[S]) -> S {
    let (mut lo, mut hi) = (S::zero(), S::zero());
    for (x, y) in a.iter().zip(b) {
        lo = lo + S::min_of(x.clone(), y.clone());
        hi = hi + S::max_of(x.clone(), y.clone());
    }
    if hi.is_zero() {
        S::zero()
    } else {
        S::one() - lo / hi
    }
}

#[derive(Clone, Debug)]
pub struct LmiParams<S> {
    pub k: S,
    pub alpha: S,
    pub denominator: Denominator,
    pub polarity: Polarity,
}

impl<S: Scalar> Default for LmiParams<S> {
    fn default() -> Self {
        LmiParams { k: S::one(), alpha: S::from_ratio(1, 2), denominator: Denominator::PerMeasure, polarity: Polarity::Similarity }
    }
}

/// Fuzzy intensions of every entity, given the current `d_I` and `d_E`.
pub fn fuzzy_intensions<S: Scalar>(
    engine: &PatternEngine<'_, S>,
    d_i: &MetricTable<S>,
    d_e: &MetricTable<S>,
    params: &LmiParams<S>,
) -> Result<Vec<FuzzySet<S>>> {
    let base = combine(d_i, d_e, &params.alpha)?;
    let records = legal_records(engine);
    (0..engine.system().entity_count())
        .into_par_iter()
        .map(|x| {
            let f = lossy_frontier(engine, x, &params.k, &[d_i, d_e], params.denominator)?;
            Ok(lmi_intension(&records, &f, &base, params.polarity))
        })
        .collect()
}

pub fn lmi_distance<S: Scalar>(
    engine: &PatternEngine<'_, S>,
    d_i: &MetricTable<S>,
    d_e: &MetricTable<S>,
    params: &LmiParams<S>,
) -> Result<MetricTable<S>> {
    let sets = fuzzy_intensions(engine, d_i, d_e, params)?;
    Ok(MetricTable::from_fn("lmi", sets.len(), |x, y| fuzzy_tanimoto(&sets[x].memberships, &sets[y].memberships)))
}

/// `1 - sum w|a - b| / sum w max(a, b)`; uniform off-diagonal weights unless
/// given. Both sums zero gives 1.
pub fn coherence_degree<S: Scalar>(d_lmi: &MetricTable<S>, d_i: &MetricTable<S>, weights: Option<&MetricTable<S>>) -> Result<S> {
    let n = d_lmi.len();
    if d_i.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::Parameter("coherence tables differ in size".into()));
    }
    let (mut num, mut den) = (S::zero(), S::zero());
    for x in 0..n {
        for y in 0..n {
            let w = match weights {
                Some(w) => w.get(x, y).clone(),
                None if x == y => continue,
                None => S::one(),
            };
            let (a, b) = (d_lmi.get(x, y).clone(), d_i.get(x, y).clone());
            num = num + w.clone() * (a.clone() - b.clone()).abs();
            den = den + w * S::max_of(a, b);
        }
    }
    if den.is_zero() {
        return Ok(S::one());
    }
    Ok(S::one() - num / den)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceReport<S> {
    pub degree: S,
    /// Degree after each step.
    pub trajectory: Vec<S>,
    /// `|d_LMI - d_I|` from the final step.
    pub residuals: MetricTable<S>,
    pub converged: bool,
    pub iterations: usize,
    pub final_lmi: MetricTable<S>,
}

/// Stopping rule and optional snapping for [`fixed_point_iteration`].
#[derive(Clone, Debug, PartialEq)]
pub struct Iteration<S> {
    pub max_iter: usize,
    /// Stop once `sup |d_LMI - d_I|` is at most this.
    pub tolerance: S,
    /// Round every iterate to multiples of this quantum. Exact iterates can
    /// grow very long denominators within a few steps.
    pub snap: Option<S>,
}

impl<S: Scalar> Iteration<S> {
    pub fn new(max_iter: usize, tolerance: S) -> Self {
        Iteration { max_iter, tolerance, snap: None }
    }
}

/// Repeats `d_I <- d_LMI` from the given start; `d_E` stays fixed.
pub fn fixed_point_iteration<S: Scalar>(
    engine: &PatternEngine<'_, S>,
    d_i: &MetricTable<S>,
    d_e: &MetricTable<S>,
    params: &LmiParams<S>,
    control: &Iteration<S>,
) -> Result<CoherenceReport<S>> {
    if control.max_iter == 0 {
        return Err(Error::Parameter("max iterations must be at least 1".into()));
    }
    if control.tolerance.is_negative() {
        return Err(Error::Parameter("tolerance must be nonnegative".into()));
    }
    if control.snap.as_ref().is_some_and(|q| !q.is_positive()) {
        return Err(Error::Parameter("snap quantum must be positive".into()));
    }
    let mut current = d_i.clone();
    let mut trajectory = Vec::new();
    let mut converged = false;
    let mut last = None;
    for _ in 0..control.max_iter {
        let mut lmi = lmi_distance(engine, &current, d_e, params)?;
        if let Some(q) = &control.snap {
            lmi = lmi.map(|v| v.snap(q));
        }
        trajectory.push(coherence_degree(&lmi, &current, None)?);
        let change = lmi.sup_distance(&current);
        let n = lmi.len();
        let residuals = MetricTable::from_fn("residual", n, |x, y| (lmi.get(x, y).clone() - current.get(x, y).clone()).abs());
        converged = change.total_cmp(&control.tolerance) != Ordering::Greater;
        last = Some((residuals, lmi.clone()));
        current = lmi;
        if converged {
            break;
        }
    }
    let (residuals, final_lmi) = last.expect("at least one step");
    Ok(CoherenceReport {
        degree: trajectory.last().cloned().expect("at least one step"),
        iterations: trajectory.len(),
        trajectory,
        residuals,
        converged,
        final_lmi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosm::RelativeMode;
    use crate::fixtures;
    use crate::metric::{tanimoto, tanimoto_metrics};
    use crate::structure::{build_subpattern_graph, PositionPolicy, Relation};
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn table(rows: &[&[(i64, i64)]]) -> MetricTable<Rational> {
        MetricTable::from_rows("t", rows.iter().map(|r| r.iter().map(|&(n, d)| q(n, d)).collect()).collect()).unwrap()
    }

    #[test]
    fn coherence_examples() {
        let h = (1, 2);
        let z = (0, 1);
        let a = table(&[&[z, h, h], &[h, z, h], &[h, h, z]]);
        let b = table(&[&[z, z, h], &[h, z, h], &[h, h, z]]);
        assert_eq!(coherence_degree(&a, &b, None).unwrap(), q(5, 6));
        assert_eq!(coherence_degree(&a, &a, None).unwrap(), q(1, 1));
        let zeros = table(&[&[z, z], &[z, z]]);
        let ones = table(&[&[z, (1, 1)], &[(1, 1), z]]);
        assert_eq!(coherence_degree(&zeros, &ones, None).unwrap(), q(0, 1));
        assert_eq!(coherence_degree(&zeros, &zeros, None).unwrap(), q(1, 1));
    }

    #[test]
    fn fuzzy_tanimoto_reduces_to_crisp() {
        let one = q(1, 1);
        let zero = q(0, 1);
        let a = [one.clone(), one.clone(), zero.clone()];
        let b = [zero.clone(), one.clone(), one.clone()];
        assert_eq!(fuzzy_tanimoto(&a, &b), tanimoto::<Rational>(&[0, 1], &[1, 2]));
        assert_eq!(fuzzy_tanimoto(&a, &a), zero);
        assert_eq!(fuzzy_tanimoto(&[one.clone(), zero.clone()], &[zero.clone(), one.clone()]), one);
    }

    #[test]
    fn single_reaction_fixed_point() {
        let sys = fixtures::single_reaction();
        let engine = PatternEngine::new(&sys, sys.identity(), RelativeMode::FreeContext, None).unwrap();
        let g = build_subpattern_graph(&engine, PositionPolicy::LeftOnly, Relation::Subpattern).unwrap();
        let m = tanimoto_metrics(&g, &q(1, 2)).unwrap();
        let ab = sys.entity("ab").unwrap();
        let f = lossy_frontier(&engine, ab, &q(1, 1), &[&m.intensional, &m.extensional], Denominator::PerMeasure).unwrap();
        assert_eq!(f.members.len(), 1);
        assert_eq!(f.members[0].objectives[1..], [Intensity::Value(q(1, 1)), Intensity::Value(q(1, 1))]);
        let r = fixed_point_iteration(&engine, &m.intensional, &m.extensional, &LmiParams::default(), &Iteration::new(10, q(0, 1))).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 2);
        assert_eq!(r.degree, q(1, 1));
        let one = fixed_point_iteration(&engine, &m.intensional, &m.extensional, &LmiParams::default(), &Iteration::new(1, q(0, 1))).unwrap();
        assert_eq!(one.trajectory.len(), 1);
    }

    #[test]
    fn membership_and_k() {
        let sys = fixtures::str1();
        let engine = PatternEngine::new(&sys, sys.identity(), RelativeMode::FreeContext, None).unwrap();
        let g = build_subpattern_graph(&engine, PositionPolicy::LeftOnly, Relation::Subpattern).unwrap();
        let m = tanimoto_metrics(&g, &q(1, 2)).unwrap();
        let a4 = sys.entity("aaaa").unwrap();
        let f = lossy_frontier(&engine, a4, &q(1, 1), &[&m.intensional, &m.extensional], Denominator::PerMeasure).unwrap();
        assert!(!f.members.is_empty());
        let records = legal_records(&engine);
        let fz = lmi_intension(&records, &f, &m.composite, Polarity::Similarity);
        for member in &f.members {
            let idx = records.iter().position(|&(ri, o)| ri == member.reaction && o == member.output).unwrap();
            assert_eq!(fz.memberships[idx], q(1, 1));
        }
        assert!(lossy_frontier(&engine, a4, &q(0, 1), &[&m.intensional], Denominator::PerMeasure).is_err());
        assert!(proximity(&q(1000, 1), &q(1, 2)) > proximity(&q(1, 1), &q(1, 2)));
    }

    #[test]
    fn membership_from_a_fixture_metric() {
        let base = table(&[&[(0, 1), (2, 3)], &[(2, 3), (0, 1)]]);
        let frontier = LossyFrontier {
            target: 0,
            context: 0,
            k: q(1, 1),
            members: vec![LossyRecord { reaction: 0, y: 0, z: 0, op: 0, output: 0, objectives: vec![] }],
        };
        let fz = lmi_intension(&[(0, 0), (1, 1)], &frontier, &base, Polarity::Similarity);
        assert_eq!(fz.memberships, vec![q(1, 1), q(1, 3)]);
        let empty = LossyFrontier { members: vec![], ..frontier };
        assert!(lmi_intension(&[(0, 0)], &empty, &base, Polarity::Similarity).empty_frontier);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let sys: crate::System = crate::system::random_system(2, &crate::system::RandomParams::default()).unwrap();
        let engine = PatternEngine::new(&sys, sys.identity(), RelativeMode::FreeContext, None).unwrap();
        let g = build_subpattern_graph(&engine, PositionPolicy::LeftOnly, Relation::Subpattern).unwrap();
        let m = tanimoto_metrics(&g, &q(1, 2)).unwrap();
        let r = fixed_point_iteration(&engine, &m.intensional, &m.extensional, &LmiParams::default(), &Iteration::new(4, q(0, 1))).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 4);
        assert_eq!(r.trajectory.len(), 4);
        assert!(r.residuals.rows().iter().flatten().any(|v| *v > q(0, 1)));
        let coarse = Iteration { snap: Some(q(1, 64)), ..Iteration::new(40, q(0, 1)) };
        let s = fixed_point_iteration(&engine, &m.intensional, &m.extensional, &LmiParams::default(), &coarse).unwrap();
        let grid = |v: &Rational| (v * q(64, 1)).is_integer();
        assert!(s.final_lmi.rows().iter().flatten().all(grid));
    }
}
