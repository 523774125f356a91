//! Pattern intensities, pattern vectors, multipattern classification and
//! multipattern frontiers.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::cost::{ExtCost, Intensity};
use crate::cosm::{simplicity_table, RelativeMode, SimplicityCache, SimplicityTable};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::system::CombinationalSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Denominator {
    /// Coordinate `j` divides by `mu_j(x|w)`.
    #[default]
    PerMeasure,
    /// Every coordinate divides by the base `mu_1(x|w)`.
    Base,
}

impl FromStr for Denominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-measure" => Ok(Denominator::PerMeasure),
            "base" => Ok(Denominator::Base),
            _ => Err(Error::Parameter(format!("unknown denominator mode `{s}`"))),
        }
    }
}

/// A pattern-vector coordinate; `Err` carries why it is undefined.
pub type Coord<S> = std::result::Result<Intensity<S>, String>;

/// `product^(1/root)`, kept unevaluated so it stays exact.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricMean<S> {
    pub product: S,
    pub root: usize,
}

impl<S: Scalar> GeometricMean<S> {
    pub fn to_f64(&self) -> f64 {
        self.product.to_f64().powf(1.0 / self.root as f64)
    }
}

impl<S: Scalar> fmt::Display for GeometricMean<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.root == 1 {
            write!(f, "{}", self.product.to_exact_string())
        } else {
            write!(f, "({})^(1/{})", self.product.to_exact_string(), self.root)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Classification<S> {
    Undefined,
    None,
    Mixed,
    Full(GeometricMean<S>),
}

impl<S: Scalar> Classification<S> {
    pub fn tag(&self) -> &'static str {
        match self {
            Classification::Undefined => "undefined",
            Classification::None => "none",
            Classification::Mixed => "mixed",
            Classification::Full(_) => "full",
        }
    }
}

/// Full when every coordinate is positive, mixed when only some are.
pub fn classify_multipattern<S: Scalar>(coords: &[Coord<S>]) -> Classification<S> {
    let mut values = Vec::with_capacity(coords.len());
    for c in coords {
        match c {
            Ok(v) => values.push(v),
            Err(_) => return Classification::Undefined,
        }
    }
    let positive = values.iter().filter(|v| v.is_positive()).count();
    if positive == 0 {
        Classification::None
    } else if positive < values.len() {
        Classification::Mixed
    } else {
        let product = values.iter().fold(S::one(), |acc, v| acc * v.value().expect("positive").clone());
        Classification::Full(GeometricMean { product, root: values.len() })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternRecord<S> {
    pub y: usize,
    pub z: usize,
    pub op: usize,
    pub x: usize,
    pub w: usize,
    /// One coordinate per extended measure, in measure order.
    pub coords: Vec<Coord<S>>,
    pub classification: Classification<S>,
}

impl<S: Scalar> PatternRecord<S> {
    pub fn is_defined(&self) -> bool {
        self.coords.iter().all(Result::is_ok)
    }

    /// Maximization dominance over defined coordinates.
    pub fn dominates(&self, other: &Self) -> bool {
        let pairs: Vec<_> = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.as_ref().unwrap().total_cmp(b.as_ref().unwrap()))
            .collect();
        pairs.iter().all(|o| *o != Ordering::Less) && pairs.iter().any(|o| *o == Ordering::Greater)
    }
}

/// Relative simplicity tables for one context, one per measure.
pub struct PatternEngine<'a, S> {
    system: &'a CombinationalSystem<S>,
    context: usize,
    tables: Vec<Arc<SimplicityTable<S>>>,
}

impl<'a, S: Scalar> PatternEngine<'a, S> {
    pub fn new(
        system: &'a CombinationalSystem<S>,
        context: usize,
        mode: RelativeMode,
        cache: Option<&SimplicityCache<S>>,
    ) -> Result<Self> {
        let tables = (0..system.measure_count())
            .map(|m| match cache {
                Some(c) => c.table(system, m, context, mode),
                None => simplicity_table(system, m, context, mode).map(Arc::new),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PatternEngine { system, context, tables })
    }

    /// Builds an engine over precomputed per-measure values (used by oracles).
    pub fn from_tables(system: &'a CombinationalSystem<S>, context: usize, tables: Vec<Arc<SimplicityTable<S>>>) -> Self {
        PatternEngine { system, context, tables }
    }

    pub fn system(&self) -> &'a CombinationalSystem<S> {
        self.system
    }

    pub fn context(&self) -> usize {
        self.context
    }

    pub fn sigma(&self, measure: usize, x: usize) -> ExtCost<S> {
        self.tables[measure].value(x)
    }

    /// `h_{bj}(y,z|w) = sigma_b(y|w) + sigma_b(z|w) + sigma*_j(op,y,z|w)`.
    pub fn h(&self, base: usize, j: usize, y: usize, z: usize, op: usize) -> ExtCost<S> {
        self.sigma(base, y)
            + self.sigma(base, z)
            + ExtCost::from(self.system.reaction_cost(j, op, y, z, self.context))
    }

    /// `(sigma_b(x|w) - h_{bj}(y,z|w)) / den` where `den` is `sigma_b(x|w)`
    /// or `sigma_j(x|w)`. Undefined when the denominator is 0 or infinite.
    pub fn coordinate(&self, base: usize, j: usize, y: usize, z: usize, op: usize, x: usize, denom: Denominator) -> Coord<S> {
        let num = self.sigma(base, x);
        let den = match denom {
            Denominator::Base => num.clone(),
            Denominator::PerMeasure => self.sigma(j, x),
        };
        let name = self.system.name(x);
        let den = match den {
            ExtCost::Finite(d) if !d.is_zero() => d,
            other => return Err(format!("simplicity of `{name}` in measure {} is {other}", j + 1)),
        };
        let ExtCost::Finite(num) = num else {
            return Err(format!("base simplicity of `{name}` is inf"));
        };
        match self.h(base, j, y, z, op) {
            ExtCost::Finite(h) => Ok(Intensity::Value((num - h) / den)),
            ExtCost::Infinite => Ok(Intensity::NegInfinite),
        }
    }

    fn check_decomposition(&self, y: usize, z: usize, op: usize, x: usize) -> Result<()> {
        let sys = self.system;
        let ok = sys.products(op, y, z).is_some_and(|ps| ps.contains(&x));
        if ok {
            Ok(())
        } else {
            Err(Error::NoSuchDecomposition {
                target: sys.name(x).to_string(),
                op: sys.op_name(op).to_string(),
                left: sys.name(y).to_string(),
                right: sys.name(z).to_string(),
            })
        }
    }

    /// Two-measure intensity with the base denominator.
    pub fn intensity(&self, base: usize, ext: usize, y: usize, z: usize, op: usize, x: usize) -> Result<Intensity<S>> {
        self.check_decomposition(y, z, op, x)?;
        self.coordinate(base, ext, y, z, op, x, Denominator::Base).map_err(|_| Error::UndefinedIntensity {
            entity: self.system.name(x).to_string(),
            value: self.sigma(base, x).to_exact_string(),
        })
    }

    /// Coordinates for every measure after the base (measure 0).
    pub fn pattern_vector(&self, y: usize, z: usize, op: usize, x: usize, denom: Denominator) -> Result<Vec<Coord<S>>> {
        if self.system.measure_count() < 2 {
            return Err(Error::Parameter("pattern vectors need at least two measures".into()));
        }
        self.check_decomposition(y, z, op, x)?;
        Ok((1..self.system.measure_count()).map(|j| self.coordinate(0, j, y, z, op, x, denom)).collect())
    }

    pub fn record(&self, y: usize, z: usize, op: usize, x: usize, denom: Denominator) -> Result<PatternRecord<S>> {
        let coords = self.pattern_vector(y, z, op, x, denom)?;
        let classification = classify_multipattern(&coords);
        Ok(PatternRecord { y, z, op, x, w: self.context, coords, classification })
    }

    /// Records for every decomposition of `x`, identity decompositions included.
    pub fn records(&self, x: usize, denom: Denominator) -> Result<Vec<PatternRecord<S>>> {
        self.system
            .decompositions(x)
            .into_iter()
            .map(|(y, z, op)| self.record(y, z, op, x, denom))
            .collect()
    }

    /// Nondominated decompositions of `x` in intensity space (maximized);
    /// records with undefined coordinates are left out.
    pub fn frontier(&self, x: usize, denom: Denominator) -> Result<Vec<PatternRecord<S>>> {
        if self.system.is_atom(x) || x == self.system.identity() {
            return Ok(Vec::new());
        }
        Ok(pareto_max(self.records(x, denom)?))
    }
}

/// Keeps defined records that no other defined record dominates, in
/// `(y, z, op)` order.
pub fn pareto_max<S: Scalar>(records: Vec<PatternRecord<S>>) -> Vec<PatternRecord<S>> {
    let defined: Vec<PatternRecord<S>> = records.into_iter().filter(PatternRecord::is_defined).collect();
    let mut out: Vec<PatternRecord<S>> = defined
        .iter()
        .filter(|r| !defined.iter().any(|o| o.dominates(r)))
        .cloned()
        .collect();
    out.sort_by_key(|r| (r.y, r.z, r.op));
    out
}

pub fn pattern_intensity<S: Scalar>(
    system: &CombinationalSystem<S>,
    y: usize,
    z: usize,
    op: usize,
    x: usize,
    w: usize,
) -> Result<Intensity<S>> {
    if system.measure_count() < 2 {
        return Err(Error::Parameter("pattern intensity needs two measures".into()));
    }
    PatternEngine::new(system, w, RelativeMode::FreeContext, None)?.intensity(0, 1, y, z, op, x)
}

pub fn multipattern_frontier<S: Scalar>(
    system: &CombinationalSystem<S>,
    x: usize,
    w: usize,
    denom: Denominator,
) -> Result<Vec<PatternRecord<S>>> {
    if system.measure_count() < 2 {
        return Err(Error::Parameter("multipattern frontiers need two measures".into()));
    }
    PatternEngine::new(system, w, RelativeMode::FreeContext, None)?.frontier(x, denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Intensity<Rational> {
        Intensity::Value(Rational::new(n.into(), d.into()))
    }

    #[test]
    fn str1_intensities() {
        let sys = fixtures::str1();
        let ent = |s: &str| sys.entity(s).unwrap();
        let (sq, cat) = (sys.operator("sq").unwrap(), sys.operator("cat").unwrap());
        let e = sys.identity();
        assert_eq!(pattern_intensity(&sys, ent("aa"), ent("aa"), sq, ent("aaaa"), e).unwrap(), q(1, 14));
        assert_eq!(pattern_intensity(&sys, ent("aaa"), ent("a"), cat, ent("aaaa"), e).unwrap(), q(0, 1));
        let engine = PatternEngine::new(&sys, e, RelativeMode::FreeContext, None).unwrap();
        let v = engine.pattern_vector(ent("aa"), ent("aa"), sq, ent("aaaa"), Denominator::PerMeasure).unwrap();
        assert_eq!(v, vec![Ok(q(1, 11))]);
        let v = engine.pattern_vector(ent("aa"), ent("aa"), sq, ent("aaaa"), Denominator::Base).unwrap();
        assert_eq!(v, vec![Ok(q(1, 14))]);
    }

    #[test]
    fn errors() {
        let sys = fixtures::str1();
        let ent = |s: &str| sys.entity(s).unwrap();
        let cat = sys.operator("cat").unwrap();
        let e = sys.identity();
        let err = pattern_intensity(&sys, ent("a"), ent("b"), cat, ent("aaaa"), e).unwrap_err();
        assert_eq!(err.code(), "no-such-decomposition");
        let err = pattern_intensity(&sys, e, e, cat, e, e).unwrap_err();
        assert_eq!(err.code(), "undefined-intensity");
    }

    #[test]
    fn classification() {
        let c = |xs: &[(i64, i64)]| -> Vec<Coord<Rational>> { xs.iter().map(|&(n, d)| Ok(q(n, d))).collect() };
        match classify_multipattern(&c(&[(1, 14), (1, 11)])) {
            Classification::Full(g) => {
                assert_eq!(g.product, Rational::new(1.into(), 154.into()));
                assert_eq!(g.root, 2);
                assert_eq!(g.to_string(), "(1/154)^(1/2)");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(classify_multipattern(&c(&[(1, 14), (-1, 7)])), Classification::Mixed);
        assert_eq!(classify_multipattern(&c(&[(-1, 1), (-1, 1)])), Classification::None);
    }

    #[test]
    fn str1_frontier() {
        let sys = fixtures::str1();
        let ent = |s: &str| sys.entity(s).unwrap();
        let sq = sys.operator("sq").unwrap();
        let f = multipattern_frontier(&sys, ent("aaaa"), sys.identity(), Denominator::PerMeasure).unwrap();
        assert!(f.iter().any(|r| (r.y, r.z, r.op) == (ent("aa"), ent("aa"), sq)));
        assert!(f.iter().all(|r| r.coords == vec![Ok(q(1, 11))]));
        assert!(multipattern_frontier(&sys, ent("a"), sys.identity(), Denominator::PerMeasure).unwrap().is_empty());
    }

    #[test]
    fn single_decomposition_frontier() {
        let sys = fixtures::single_reaction();
        let ab = sys.entity("ab").unwrap();
        let f = multipattern_frontier(&sys, ab, sys.identity(), Denominator::Base).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].coords, vec![Ok(q(1, 4))]);
    }
}
