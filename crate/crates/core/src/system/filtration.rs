//! Checks that an operator tagged as a filtration realizes
//! `x *f y = y` when `x = y` and `x *f y = e` otherwise.

use serde::Serialize;

use super::CombinationalSystem;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiltrationViolation {
    pub op: String,
    pub left: String,
    pub right: String,
    pub kind: String,
    pub expected: String,
    pub found: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FiltrationReport {
    pub checked_pairs: usize,
    pub violations: Vec<FiltrationViolation>,
}

impl FiltrationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scans every ordered pair of derived (non-atom, non-identity) entities for
/// each filtration operator. Pairs involving the identity are governed by the
/// implicit identity reactions; atoms can never be products, so the diagonal
/// `a *f a = a` is only realizable for derived entities.
pub fn validate_filtration<S: Scalar>(system: &CombinationalSystem<S>) -> Result<FiltrationReport> {
    let ops = &system.roles().filtration;
    if ops.is_empty() {
        return Err(Error::Parameter("system declares no filtration operator".into()));
    }
    let e = system.identity();
    let mut report = FiltrationReport { checked_pairs: 0, violations: Vec::new() };
    for &op in ops {
        let derived: Vec<usize> =
            (0..system.entity_count()).filter(|&x| x != e && !system.is_atom(x)).collect();
        for &x in &derived {
            for &y in &derived {
                report.checked_pairs += 1;
                let expected = if x == y { y } else { e };
                let violation = |kind: &str, found: Vec<String>| FiltrationViolation {
                    op: system.op_name(op).to_string(),
                    left: system.name(x).to_string(),
                    right: system.name(y).to_string(),
                    kind: kind.to_string(),
                    expected: system.name(expected).to_string(),
                    found,
                };
                match system.explicit_reaction(op, x, y) {
                    None => report.violations.push(violation("incomplete filtration", Vec::new())),
                    Some(r) if r.products != [expected] => {
                        let found = r.products.iter().map(|&p| system.name(p).to_string()).collect();
                        report.violations.push(violation("wrong product", found));
                    }
                    Some(_) => {}
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
    use crate::system::{MeasureDraft, SystemBuilder};
    use crate::Rational;

    #[test]
    fn complete_filtration_passes() {
        let sys = fixtures::filtration();
        let report = validate_filtration(&sys).unwrap();
        assert!(report.is_valid(), "{:?}", report.violations);
        let f = sys.operator("filt").unwrap();
        let a = sys.entity("a").unwrap();
        let b = sys.entity("b").unwrap();
        assert_eq!(sys.products(f, a, a), Some(vec![a]));
        assert_eq!(sys.products(f, a, b), Some(vec![sys.identity()]));
    }

    #[test]
    fn missing_diagonal_pair_is_reported() {
        let mut b = SystemBuilder::<Rational>::new("e");
        b.atom("x").atom("y").entity("a").entity("b");
        b.operator("mix").operator("filt").filtration("filt");
        b.reaction("mix", "x", "y", &["a", "b"]);
        b.reaction("filt", "a", "a", &["a"]);
        b.reaction("filt", "a", "b", &["e"]);
        b.reaction("filt", "b", "a", &["b"]);
        let one = || Rational::from_integer(1.into());
        let mut m = MeasureDraft::new("m1");
        m.operators = vec!["mix".into(), "filt".into()];
        m.atom_costs = vec![("x".into(), one()), ("y".into(), one())];
        m.op_costs = vec![("mix".into(), one()), ("filt".into(), one())];
        b.measure(m);
        let sys = b.build().unwrap();
        let report = validate_filtration(&sys).unwrap();
        let kinds: Vec<(&str, &str, &str)> = report
            .violations
            .iter()
            .map(|v| (v.left.as_str(), v.right.as_str(), v.kind.as_str()))
            .collect();
        assert_eq!(kinds, vec![("b", "a", "wrong product"), ("b", "b", "incomplete filtration")]);
    }

    #[test]
    fn atom_diagonal_cannot_be_declared() {
        let mut b = SystemBuilder::<Rational>::new("e");
        b.atom("a").operator("filt").filtration("filt");
        b.reaction("filt", "a", "a", &["a"]);
        let mut m = MeasureDraft::new("m1");
        m.operators = vec!["filt".into()];
        m.atom_costs = vec![("a".into(), Rational::from_integer(1.into()))];
        m.op_costs = vec![("filt".into(), Rational::from_integer(1.into()))];
        b.measure(m);
        assert_eq!(b.build().unwrap_err().code(), "atom-producible");
    }
}
