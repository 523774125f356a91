//! Expressions over the free operator algebra, their evaluation through the
//! reaction table, auto-op addresses, and syntactic costs.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cost::{CostVector, ExtCost};
use crate::cosm::{simplicity_table, RelativeMode};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::system::CombinationalSystem;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expression {
    Leaf(usize),
    /// `op(left,right)#select`, with `select` 1-based.
    Node { op: usize, left: Box<Expression>, right: Box<Expression>, select: usize },
}

/// One operator application instance with canonical addresses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutoOp {
    pub op: usize,
    pub left_address: String,
    pub right_address: String,
    pub output_addresses: Vec<String>,
}

impl Expression {
    pub fn leaf(x: usize) -> Self {
        Expression::Leaf(x)
    }

    pub fn node(op: usize, left: Expression, right: Expression) -> Self {
        Expression::Node { op, left: Box::new(left), right: Box::new(right), select: 1 }
    }

    pub fn node_select(op: usize, left: Expression, right: Expression, select: usize) -> Self {
        Expression::Node { op, left: Box::new(left), right: Box::new(right), select }
    }

    pub fn size(&self) -> usize {
        match self {
            Expression::Leaf(_) => 1,
            Expression::Node { left, right, .. } => 1 + left.size() + right.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expression::Leaf(_) => 0,
            Expression::Node { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Parses the prefix form `op(child,child)#n` with entity ids as leaves.
    pub fn parse<S: Scalar>(system: &CombinationalSystem<S>, text: &str) -> Result<Expression> {
        let mut p = Parser { system, text, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }

    pub fn display<'a, S: Scalar>(&'a self, system: &'a CombinationalSystem<S>) -> impl fmt::Display + 'a {
        Shown { expr: self, system }
    }

    /// Canonical address of this node's output (the selected product).
    pub fn address<S: Scalar>(&self, system: &CombinationalSystem<S>) -> String {
        match self {
            Expression::Leaf(x) => system.name(*x).to_string(),
            Expression::Node { op, left, right, select } => format!(
                "{}({},{})#{}",
                system.op_name(*op),
                left.address(system),
                right.address(system),
                select
            ),
        }
    }

    /// The auto-ops of every internal node in post-order.
    pub fn auto_ops<S: Scalar>(&self, system: &CombinationalSystem<S>) -> Result<Vec<AutoOp>> {
        let mut out = Vec::new();
        self.collect_auto_ops(system, &mut out)?;
        Ok(out)
    }

    fn collect_auto_ops<S: Scalar>(&self, system: &CombinationalSystem<S>, out: &mut Vec<AutoOp>) -> Result<usize> {
        match self {
            Expression::Leaf(x) => Ok(*x),
            Expression::Node { op, left, right, .. } => {
                let l = left.collect_auto_ops(system, out)?;
                let r = right.collect_auto_ops(system, out)?;
                let products = system.products(*op, l, r).ok_or_else(|| self.missing(system))?;
                let (la, ra) = (left.address(system), right.address(system));
                let name = system.op_name(*op);
                out.push(AutoOp {
                    op: *op,
                    output_addresses: (1..=products.len()).map(|n| format!("{name}({la},{ra})#{n}")).collect(),
                    left_address: la,
                    right_address: ra,
                });
                self.pick(system, &products)
            }
        }
    }

    fn missing<S: Scalar>(&self, system: &CombinationalSystem<S>) -> Error {
        Error::MissingReaction { node: self.display(system).to_string() }
    }

    fn pick<S: Scalar>(&self, system: &CombinationalSystem<S>, products: &[usize]) -> Result<usize> {
        let Expression::Node { select, .. } = self else { unreachable!() };
        select
            .checked_sub(1)
            .and_then(|i| products.get(i).copied())
            .ok_or_else(|| self.missing(system))
    }

    /// `r(E)`: bottom-up evaluation through the reaction table.
    pub fn evaluate<S: Scalar>(&self, system: &CombinationalSystem<S>) -> Result<usize> {
        match self {
            Expression::Leaf(x) => Ok(*x),
            Expression::Node { op, left, right, .. } => {
                let l = left.evaluate(system)?;
                let r = right.evaluate(system)?;
                let products = system.products(*op, l, r).ok_or_else(|| self.missing(system))?;
                self.pick(system, &products)
            }
        }
    }

    /// Sums `per_leaf` over leaf instances and `per_node` over operator
    /// instances, each node seeing its evaluated operands.
    fn fold_cost<S: Scalar, T: Clone>(
        &self,
        system: &CombinationalSystem<S>,
        per_leaf: &impl Fn(usize) -> T,
        per_node: &impl Fn(usize, usize, usize) -> T,
        add: &impl Fn(T, T) -> T,
    ) -> Result<(usize, T)> {
        match self {
            Expression::Leaf(x) => Ok((*x, per_leaf(*x))),
            Expression::Node { op, left, right, .. } => {
                let (l, cl) = left.fold_cost(system, per_leaf, per_node, add)?;
                let (r, cr) = right.fold_cost(system, per_leaf, per_node, add)?;
                let products = system.products(*op, l, r).ok_or_else(|| self.missing(system))?;
                let x = self.pick(system, &products)?;
                Ok((x, add(add(cl, cr), per_node(*op, l, r))))
            }
        }
    }
}

struct Shown<'a, S> {
    expr: &'a Expression,
    system: &'a CombinationalSystem<S>,
}

impl<S: Scalar> fmt::Display for Shown<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            Expression::Leaf(x) => f.write_str(self.system.name(*x)),
            Expression::Node { op, left, right, select } => {
                write!(
                    f,
                    "{}({},{})",
                    self.system.op_name(*op),
                    left.display(self.system),
                    right.display(self.system)
                )?;
                if *select != 1 {
                    write!(f, "#{select}")?;
                }
                Ok(())
            }
        }
    }
}

struct Parser<'a, S> {
    system: &'a CombinationalSystem<S>,
    text: &'a str,
    pos: usize,
}

impl<S: Scalar> Parser<'_, S> {
    fn err(&self, message: &str) -> Error {
        Error::ExpressionParse { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.text[self.pos..].chars().next().unwrap().len_utf8();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn token(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.text[start..];
        let len = rest
            .find(|c: char| c.is_whitespace() || matches!(c, '(' | ')' | ','))
            .unwrap_or(rest.len());
        // a trailing `#n` belongs to the node, not to a leaf id
        self.pos += len;
        &self.text[start..start + len]
    }

    fn expr(&mut self) -> Result<Expression> {
        let start = self.pos;
        let tok = self.token().to_string();
        if tok.is_empty() {
            return Err(self.err("expected an entity or operator"));
        }
        if self.eat('(') {
            let op = self.system.operator(&tok).map_err(|_| Error::ExpressionParse {
                offset: start,
                message: format!("unknown operator `{tok}`"),
            })?;
            let left = self.expr()?;
            if !self.eat(',') {
                return Err(self.err("expected `,`"));
            }
            let right = self.expr()?;
            if !self.eat(')') {
                return Err(self.err("expected `)`"));
            }
            let mut select = 1;
            if self.eat('#') {
                let at = self.pos;
                let digits: String = self.text[at..].chars().take_while(char::is_ascii_digit).collect();
                self.pos += digits.len();
                select = digits.parse().map_err(|_| self.err("expected a product index"))?;
                if select == 0 {
                    return Err(Error::ExpressionParse { offset: at, message: "product index starts at 1".into() });
                }
            }
            Ok(Expression::node_select(op, left, right, select))
        } else {
            self.system.entity(&tok).map(Expression::Leaf).map_err(|_| Error::ExpressionParse {
                offset: start,
                message: format!("unknown entity `{tok}`"),
            })
        }
    }
}

/// `sigma!_j(E)`: leaf simplicities plus operator costs, counted with
/// repetition. An operator outside the measure makes the cost infinite.
pub fn expression_cost<S: Scalar>(
    system: &CombinationalSystem<S>,
    measure: usize,
    expr: &Expression,
) -> Result<ExtCost<S>> {
    let table = simplicity_table(system, measure, system.identity(), RelativeMode::FreeContext)?;
    let e = system.identity();
    let (_, cost) = expr.fold_cost(
        system,
        &|x| table.value(x),
        &|op, l, r| ExtCost::from(system.reaction_cost(measure, op, l, r, e)),
        &|a, b| a + b,
    )?;
    Ok(cost)
}

/// A random well-formed expression: starting from atom and identity leaves,
/// fire up to `steps` random explicit reactions whose operands are already
/// built, then return one of the built nodes.
pub fn random_expression<S: Scalar, R: Rng + ?Sized>(
    system: &CombinationalSystem<S>,
    rng: &mut R,
    steps: usize,
) -> Option<Expression> {
    let mut pool: Vec<(usize, Expression)> = system.atoms().map(|a| (a, Expression::leaf(a))).collect();
    pool.push((system.identity(), Expression::leaf(system.identity())));
    let mut built = Vec::new();
    for _ in 0..steps {
        let usable: Vec<_> = system
            .reactions()
            .iter()
            .filter(|r| pool.iter().any(|p| p.0 == r.left) && pool.iter().any(|p| p.0 == r.right))
            .collect();
        let Some(r) = usable.choose(rng) else { break };
        let mut operand = |x: usize| {
            let options: Vec<&Expression> = pool.iter().filter(|p| p.0 == x).map(|p| &p.1).collect();
            (*options.choose(rng).expect("operand is built")).clone()
        };
        let (a, b) = (operand(r.left), operand(r.right));
        let select = rng.gen_range(0..r.products.len());
        let node = Expression::node_select(r.op, a, b, select + 1);
        pool.push((r.products[select], node));
        built.push(pool.len() - 1);
    }
    let &i = built.choose(rng)?;
    Some(pool.swap_remove(i).1)
}

/// Per-measure [`expression_cost`].
pub fn vector_expression_cost<S: Scalar>(
    system: &CombinationalSystem<S>,
    expr: &Expression,
) -> Result<CostVector<S>> {
    let costs = (0..system.measure_count())
        .map(|m| expression_cost(system, m, expr))
        .collect::<Result<Vec<_>>>()?;
    Ok(CostVector(costs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::Rational;

    fn q(n: i64) -> ExtCost<Rational> {
        ExtCost::Finite(Rational::from_integer(n.into()))
    }

    #[test]
    fn parse_and_evaluate() {
        let sys = fixtures::toy1();
        let e = Expression::parse(&sys, "cat(cat(a,b),a)").unwrap();
        assert_eq!(sys.name(e.evaluate(&sys).unwrap()), "aba");
        assert_eq!(e.address(&sys), "cat(cat(a,b)#1,a)#1");
        assert_eq!(e.display(&sys).to_string(), "cat(cat(a,b),a)");
        assert_eq!(expression_cost(&sys, 0, &e).unwrap(), q(5));
        let leaf = Expression::parse(&sys, " a ").unwrap();
        assert_eq!(expression_cost(&sys, 0, &leaf).unwrap(), q(1));
    }

    #[test]
    fn missing_reactions_and_bad_syntax() {
        let sys = fixtures::toy1();
        let e = Expression::parse(&sys, "cat(b,b)").unwrap();
        assert_eq!(e.evaluate(&sys).unwrap_err().code(), "missing-reaction");
        assert_eq!(Expression::parse(&sys, "cat(a,b").unwrap_err().code(), "expression-parse");
        assert_eq!(Expression::parse(&sys, "cut(a,b)").unwrap_err().code(), "expression-parse");
        let sel = Expression::parse(&sys, "cat(a,b)#2").unwrap();
        assert!(sel.evaluate(&sys).is_err());
    }

    #[test]
    fn identity_leaves_are_free() {
        let sys = fixtures::toy1();
        let e = Expression::parse(&sys, "cat(e,ab)").unwrap();
        assert_eq!(sys.name(e.evaluate(&sys).unwrap()), "ab");
        assert_eq!(expression_cost(&sys, 0, &e).unwrap(), q(3));
    }

    #[test]
    fn vector_costs() {
        let sys = fixtures::toy2();
        let e = Expression::parse(&sys, "cat(a,b)").unwrap();
        assert_eq!(vector_expression_cost(&sys, &e).unwrap(), CostVector(vec![q(3), q(4)]));
        let sq = Expression::parse(&sys, "sq(cat(a,a),cat(a,a))").unwrap();
        let view = sys.with_measures(|ms| ms[0].operators[1] = false);
        let v = vector_expression_cost(&view, &sq).unwrap();
        assert_eq!(v.0[0], ExtCost::Infinite);
    }

    #[test]
    fn multi_output_addresses() {
        let sys = fixtures::filtration();
        let e = Expression::parse(&sys, "mix(x,y)#2").unwrap();
        assert_eq!(sys.name(e.evaluate(&sys).unwrap()), "b");
        let ops = e.auto_ops(&sys).unwrap();
        assert_eq!(ops[0].output_addresses, vec!["mix(x,y)#1", "mix(x,y)#2"]);
    }
}
