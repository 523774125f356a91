//! Scalar abstraction shared by every engine.
//!
//! All cost arithmetic is written against [`Scalar`]. The default instantiation
//! is the arbitrary-precision [`BigRational`](num_rational::BigRational), which
//! keeps dominance tests and property checks exact. `Rational64` and `f64` are
//! provided for quick experiments where exactness is not required.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Num + Signed + Clone + Debug + Display + PartialOrd + Send + Sync + 'static
{
    /// Total order used for canonical sorting. Rationals order exactly;
    /// floats use IEEE `total_cmp`.
    fn total_cmp(&self, other: &Self) -> Ordering;

    /// `numer / denom`; callers guarantee `denom != 0`.
    fn from_ratio(numer: i64, denom: i64) -> Self;

    /// Parses `"p/q"`, `"n"` (and, for floats, any decimal literal).
    fn parse_exact(text: &str) -> Option<Self>;

    /// Canonical text form: `"n"` for integers, `"p/q"` in lowest terms.
    fn to_exact_string(&self) -> String;

    /// Lossy conversion for statistics that are reported only approximately.
    fn to_f64(&self) -> f64;

    /// Nearest multiple of `quantum` (ties away from zero); `quantum > 0`.
    fn snap(&self, quantum: &Self) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a.total_cmp(&b) == Ordering::Less {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b.total_cmp(&a) == Ordering::Less {
            b
        } else {
            a
        }
    }
}

fn split_ratio(text: &str) -> Option<(&str, Option<&str>)> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    match text.split_once('/') {
        Some((n, d)) => Some((n.trim(), Some(d.trim()))),
        None => Some((text, None)),
    }
}

impl Scalar for BigRational {
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn parse_exact(text: &str) -> Option<Self> {
        let (n, d) = split_ratio(text)?;
        let numer = BigInt::from_str(n).ok()?;
        let denom = match d {
            Some(d) => BigInt::from_str(d).ok()?,
            None => BigInt::one(),
        };
        if denom.is_zero() {
            return None;
        }
        Some(BigRational::new(numer, denom))
    }

    fn to_exact_string(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn snap(&self, quantum: &Self) -> Self {
        (self / quantum).round() * quantum
    }
}

impl Scalar for Rational64 {
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Rational64::new(numer, denom)
    }

    fn parse_exact(text: &str) -> Option<Self> {
        let (n, d) = split_ratio(text)?;
        let numer = n.parse::<i64>().ok()?;
        let denom = match d {
            Some(d) => d.parse::<i64>().ok()?,
            None => 1,
        };
        if denom == 0 {
            return None;
        }
        Some(Rational64::new(numer, denom))
    }

    fn to_exact_string(&self) -> String {
        if *self.denom() == 1 {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn snap(&self, quantum: &Self) -> Self {
        (self / quantum).round() * quantum
    }
}

impl Scalar for f64 {
    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn parse_exact(text: &str) -> Option<Self> {
        let (n, d) = split_ratio(text)?;
        let numer = n.parse::<f64>().ok()?;
        match d {
            Some(d) => {
                let denom = d.parse::<f64>().ok()?;
                (denom != 0.0).then(|| numer / denom)
            }
            None => Some(numer),
        }
    }

    fn to_exact_string(&self) -> String {
        format!("{self}")
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn snap(&self, quantum: &Self) -> Self {
        (self / quantum).round() * quantum
    }
}

/// Parses a scalar, returning `None` for malformed or negative input where
/// `nonnegative` is requested.
pub fn parse_scalar<S: Scalar>(text: &str, nonnegative: bool) -> Option<S> {
    let value = S::parse_exact(text)?;
    if nonnegative && value.is_negative() {
        return None;
    }
    Some(value)
}
