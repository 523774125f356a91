//! Extended nonnegative costs and per-measure cost vectors.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;


use crate::scalar::Scalar;

/// A nonnegative cost, or `Infinite` for underivable entities and for
/// derivations that use an operator outside a measure's operator set.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtCost<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> ExtCost<S> {
    pub fn zero() -> Self {
        ExtCost::Finite(S::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtCost::Finite(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtCost::Finite(v) if v.is_zero())
    }

    pub fn finite(&self) -> Option<&S> {
        match self {
            ExtCost::Finite(v) => Some(v),
            ExtCost::Infinite => None,
        }
    }

    pub fn into_finite(self) -> Option<S> {
        match self {
            ExtCost::Finite(v) => Some(v),
            ExtCost::Infinite => None,
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtCost::Finite(a), ExtCost::Finite(b)) => a.total_cmp(b),
            (ExtCost::Finite(_), ExtCost::Infinite) => Ordering::Less,
            (ExtCost::Infinite, ExtCost::Finite(_)) => Ordering::Greater,
            (ExtCost::Infinite, ExtCost::Infinite) => Ordering::Equal,
        }
    }

    pub fn le(&self, other: &Self) -> bool {
        self.total_cmp(other) != Ordering::Greater
    }

    pub fn lt(&self, other: &Self) -> bool {
        self.total_cmp(other) == Ordering::Less
    }

    pub fn min(self, other: Self) -> Self {
        if other.lt(&self) {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self.lt(&other) {
            other
        } else {
            self
        }
    }

    pub fn to_exact_string(&self) -> String {
        match self {
            ExtCost::Finite(v) => v.to_exact_string(),
            ExtCost::Infinite => "inf".to_string(),
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        if text.trim() == "inf" {
            return Some(ExtCost::Infinite);
        }
        S::parse_exact(text).map(ExtCost::Finite)
    }
}

impl<S: Scalar> Add for ExtCost<S> {
    type Output = ExtCost<S>;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (ExtCost::Finite(a), ExtCost::Finite(b)) => ExtCost::Finite(a + b),
            _ => ExtCost::Infinite,
        }
    }
}

impl<'a, S: Scalar> Add<&'a ExtCost<S>> for &'a ExtCost<S> {
    type Output = ExtCost<S>;

    fn add(self, rhs: &'a ExtCost<S>) -> ExtCost<S> {
        match (self, rhs) {
            (ExtCost::Finite(a), ExtCost::Finite(b)) => ExtCost::Finite(a.clone() + b.clone()),
            _ => ExtCost::Infinite,
        }
    }
}

impl<S: Scalar> From<Option<S>> for ExtCost<S> {
    fn from(value: Option<S>) -> Self {
        value.map_or(ExtCost::Infinite, ExtCost::Finite)
    }
}

impl<S: Scalar> fmt::Display for ExtCost<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_exact_string())
    }
}

/// One cost per declared measure, in measure order.
#[derive(Clone, Debug, PartialEq)]
pub struct CostVector<S>(pub Vec<ExtCost<S>>);

impl<S: Scalar> CostVector<S> {
    pub fn zeros(len: usize) -> Self {
        CostVector(vec![ExtCost::zero(); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        CostVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Reflexive Pareto dominance: componentwise `<=`.
    pub fn weakly_dominates(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a.le(b))
    }

    /// Strict Pareto dominance: componentwise `<=` with at least one `<`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.weakly_dominates(other) && self.0.iter().zip(&other.0).any(|(a, b)| a.lt(b))
    }

    /// Lexicographic order used to canonicalize bundles.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.len().cmp(&other.len())
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(ExtCost::to_exact_string).collect()
    }
}

impl<S: Scalar> fmt::Display for CostVector<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.to_strings().join(","))
    }
}

/// A value in `[-inf, +inf)` used for pattern intensities, whose numerators
/// go to minus infinity when a decomposition operand is underivable.
#[derive(Clone, Debug, PartialEq)]
pub enum Intensity<S> {
    NegInfinite,
    Value(S),
}

impl<S: Scalar> Intensity<S> {
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Intensity::Value(a), Intensity::Value(b)) => a.total_cmp(b),
            (Intensity::NegInfinite, Intensity::Value(_)) => Ordering::Less,
            (Intensity::Value(_), Intensity::NegInfinite) => Ordering::Greater,
            (Intensity::NegInfinite, Intensity::NegInfinite) => Ordering::Equal,
        }
    }

    pub fn is_positive(&self) -> bool {
        matches!(self, Intensity::Value(v) if v.is_positive())
    }

    pub fn value(&self) -> Option<&S> {
        match self {
            Intensity::Value(v) => Some(v),
            Intensity::NegInfinite => None,
        }
    }

    pub fn to_exact_string(&self) -> String {
        match self {
            Intensity::Value(v) => v.to_exact_string(),
            Intensity::NegInfinite => "-inf".to_string(),
        }
    }
}

impl<S: Scalar> fmt::Display for Intensity<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_exact_string())
    }
}
