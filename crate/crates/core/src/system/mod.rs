//! Finite combinational systems: entities, atoms, an identity, binary
//! operators with (possibly multi-output) reaction tables, and a list of
//! cost measures. Systems are immutable once built; every engine borrows them.

mod document;
pub mod filtration;
pub mod generate;

use std::collections::{BTreeSet, HashMap};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use document::{load_system, load_system_file};
pub use filtration::{validate_filtration, FiltrationReport, FiltrationViolation};
pub use generate::{generate_builtin, random_system, BuiltinFamily, GenerateParams, RandomParams};

/// A reaction `left *op right -> products`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reaction {
    pub op: usize,
    pub left: usize,
    pub right: usize,
    pub products: Vec<usize>,
}

/// One cost measure `(sigma_j, sigma*_j)` restricted to an operator set.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpec<S> {
    pub id: String,
    /// Membership of each operator (by index) in this measure's operator set.
    pub operators: Vec<bool>,
    /// Declared base cost of each atom; `None` for non-atoms.
    pub atom_costs: Vec<Option<S>>,
    /// Default cost of each operator in the set; `None` outside the set.
    pub op_costs: Vec<Option<S>>,
    pub reaction_overrides: HashMap<(usize, usize, usize), S>,
    pub context_overrides: HashMap<(usize, usize, usize, usize), S>,
}

impl<S: Scalar> MeasureSpec<S> {
    pub fn uses(&self, op: usize) -> bool {
        self.operators[op]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaRole {
    pub entity: usize,
    pub alpha: usize,
    pub beta: usize,
}

/// Optional operator/entity tags the structural checks look for.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Roles {
    pub filtration: Vec<usize>,
    pub gamma: Option<GammaRole>,
}

#[derive(Clone, Debug)]
pub struct CombinationalSystem<S> {
    entities: Vec<String>,
    entity_index: HashMap<String, usize>,
    atoms: Vec<bool>,
    identity: usize,
    operators: Vec<String>,
    operator_index: HashMap<String, usize>,
    reactions: Vec<Reaction>,
    reaction_index: HashMap<(usize, usize, usize), usize>,
    by_product: Vec<Vec<usize>>,
    by_operand: Vec<Vec<usize>>,
    measures: Vec<MeasureSpec<S>>,
    roles: Roles,
    fingerprint: String,
}

impl<S: Scalar> PartialEq for CombinationalSystem<S> {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.atoms == other.atoms
            && self.identity == other.identity
            && self.operators == other.operators
            && self.reactions == other.reactions
            && self.measures == other.measures
            && self.roles == other.roles
    }
}

impl<S: Scalar> CombinationalSystem<S> {
    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn name(&self, entity: usize) -> &str {
        &self.entities[entity]
    }

    pub fn entity(&self, name: &str) -> Result<usize> {
        self.entity_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownEntity(name.to_string()))
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn is_atom(&self, entity: usize) -> bool {
        self.atoms[entity]
    }

    pub fn atoms(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.entities.len()).filter(move |&x| self.atoms[x])
    }

    pub fn operator_count(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[String] {
        &self.operators
    }

    pub fn op_name(&self, op: usize) -> &str {
        &self.operators[op]
    }

    pub fn operator(&self, name: &str) -> Result<usize> {
        self.operator_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownOperator(name.to_string()))
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    /// Explicit reactions producing `entity`.
    pub fn producers(&self, entity: usize) -> impl Iterator<Item = &Reaction> + '_ {
        self.by_product[entity].iter().map(move |&r| &self.reactions[r])
    }

    /// Indices of explicit reactions that take `entity` as an operand.
    pub fn consumers(&self, entity: usize) -> &[usize] {
        &self.by_operand[entity]
    }

    pub fn explicit_reaction(&self, op: usize, left: usize, right: usize) -> Option<&Reaction> {
        self.reaction_index.get(&(op, left, right)).map(|&r| &self.reactions[r])
    }

    /// Products of `left *op right`, including the implicit identity
    /// reactions `x * e = x` and `e * x = x`.
    pub fn products(&self, op: usize, left: usize, right: usize) -> Option<Vec<usize>> {
        if left == self.identity {
            return Some(vec![right]);
        }
        if right == self.identity {
            return Some(vec![left]);
        }
        self.explicit_reaction(op, left, right).map(|r| r.products.clone())
    }

    pub fn measure_count(&self) -> usize {
        self.measures.len()
    }

    pub fn measures(&self) -> &[MeasureSpec<S>] {
        &self.measures
    }

    pub fn measure_spec(&self, measure: usize) -> &MeasureSpec<S> {
        &self.measures[measure]
    }

    /// Resolves a measure by id, or by 1-based index written as a number.
    pub fn measure(&self, selector: &str) -> Result<usize> {
        if let Some(i) = self.measures.iter().position(|m| m.id == selector) {
            return Ok(i);
        }
        match selector.parse::<usize>() {
            Ok(n) if n >= 1 && n <= self.measures.len() => Ok(n - 1),
            _ => Err(Error::UnknownMeasure(selector.to_string())),
        }
    }

    pub fn roles(&self) -> &Roles {
        &self.roles
    }

    /// Hex digest of the canonical serialization.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn atom_cost(&self, measure: usize, atom: usize) -> Option<&S> {
        self.measures[measure].atom_costs[atom].as_ref()
    }

    /// Cost of the auto-op `left *op right` in `measure`, catalysed by
    /// `context` (pass the identity for "no context"). `None` when `op` lies
    /// outside the measure's operator set.
    pub fn reaction_cost(
        &self,
        measure: usize,
        op: usize,
        left: usize,
        right: usize,
        context: usize,
    ) -> Option<S> {
        let spec = &self.measures[measure];
        if !spec.operators[op] {
            return None;
        }
        if left == self.identity || right == self.identity {
            return Some(S::zero());
        }
        if context != self.identity {
            if let Some(c) = spec.context_overrides.get(&(op, left, right, context)) {
                return Some(c.clone());
            }
        }
        if let Some(c) = spec.reaction_overrides.get(&(op, left, right)) {
            return Some(c.clone());
        }
        spec.op_costs[op].clone()
    }

    /// All decompositions `(left, right, op)` having `target` among their
    /// products, implicit identity decompositions included. Sorted.
    pub fn decompositions(&self, target: usize) -> Vec<(usize, usize, usize)> {
        let mut out: BTreeSet<(usize, usize, usize)> = self
            .producers(target)
            .map(|r| (r.left, r.right, r.op))
            .collect();
        for op in 0..self.operators.len() {
            out.insert((target, self.identity, op));
            out.insert((self.identity, target, op));
        }
        out.into_iter().collect()
    }

    pub(crate) fn raw_parts(&self) -> (&[bool], &[MeasureSpec<S>]) {
        (&self.atoms, &self.measures)
    }
}

/// Incremental constructor; [`SystemBuilder::build`] runs every validation.
#[derive(Clone, Debug)]
pub struct SystemBuilder<S> {
    entities: Vec<String>,
    atoms: Vec<String>,
    identity: String,
    operators: Vec<String>,
    reactions: Vec<(String, String, String, Vec<String>)>,
    measures: Vec<MeasureDraft<S>>,
    filtration: Vec<String>,
    gamma: Option<(String, String, String)>,
}

#[derive(Clone, Debug)]
pub struct MeasureDraft<S> {
    pub id: String,
    pub operators: Vec<String>,
    pub atom_costs: Vec<(String, S)>,
    pub op_costs: Vec<(String, S)>,
    pub reaction_overrides: Vec<(String, String, String, S)>,
    pub context_overrides: Vec<(String, String, String, String, S)>,
}

impl<S> MeasureDraft<S> {
    pub fn new(id: impl Into<String>) -> Self {
        MeasureDraft {
            id: id.into(),
            operators: Vec::new(),
            atom_costs: Vec::new(),
            op_costs: Vec::new(),
            reaction_overrides: Vec::new(),
            context_overrides: Vec::new(),
        }
    }
}

impl<S: Scalar> SystemBuilder<S> {
    pub fn new(identity: impl Into<String>) -> Self {
        let identity = identity.into();
        SystemBuilder {
            entities: vec![identity.clone()],
            atoms: Vec::new(),
            identity,
            operators: Vec::new(),
            reactions: Vec::new(),
            measures: Vec::new(),
            filtration: Vec::new(),
            gamma: None,
        }
    }

    pub fn entity(&mut self, name: impl Into<String>) -> &mut Self {
        self.entities.push(name.into());
        self
    }

    pub fn atom(&mut self, name: impl Into<String>) -> &mut Self {
        let name = name.into();
        self.entities.push(name.clone());
        self.atoms.push(name);
        self
    }

    pub fn operator(&mut self, name: impl Into<String>) -> &mut Self {
        self.operators.push(name.into());
        self
    }

    pub fn reaction(&mut self, op: &str, left: &str, right: &str, products: &[&str]) -> &mut Self {
        self.reactions.push((
            op.to_string(),
            left.to_string(),
            right.to_string(),
            products.iter().map(|p| p.to_string()).collect(),
        ));
        self
    }

    pub fn measure(&mut self, draft: MeasureDraft<S>) -> &mut Self {
        self.measures.push(draft);
        self
    }

    pub fn filtration(&mut self, op: &str) -> &mut Self {
        self.filtration.push(op.to_string());
        self
    }

    pub fn gamma(&mut self, entity: &str, alpha: &str, beta: &str) -> &mut Self {
        self.gamma = Some((entity.to_string(), alpha.to_string(), beta.to_string()));
        self
    }

    pub fn has_entity(&self, name: &str) -> bool {
        self.entities.iter().any(|e| e == name)
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn build(&self) -> Result<CombinationalSystem<S>> {
        let spec = document::RawSystem::from_builder(self);
        document::validate(&spec)
    }
}

pub(crate) fn is_valid_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_whitespace() && !c.is_control())
}

pub(crate) fn digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hex::encode(hasher.finalize())
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble<S: Scalar>(
    entities: Vec<String>,
    atoms: Vec<bool>,
    identity: usize,
    operators: Vec<String>,
    reactions: Vec<Reaction>,
    measures: Vec<MeasureSpec<S>>,
    roles: Roles,
) -> CombinationalSystem<S> {
    let entity_index = entities.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
    let operator_index = operators.iter().enumerate().map(|(i, o)| (o.clone(), i)).collect();
    let mut reaction_index = HashMap::new();
    let mut by_product = vec![Vec::new(); entities.len()];
    let mut by_operand = vec![Vec::new(); entities.len()];
    for (i, r) in reactions.iter().enumerate() {
        reaction_index.insert((r.op, r.left, r.right), i);
        let mut seen = BTreeSet::new();
        for &p in &r.products {
            if seen.insert(p) {
                by_product[p].push(i);
            }
        }
        by_operand[r.left].push(i);
        if r.right != r.left {
            by_operand[r.right].push(i);
        }
    }
    let mut system = CombinationalSystem {
        entities,
        entity_index,
        atoms,
        identity,
        operators,
        operator_index,
        reactions,
        reaction_index,
        by_product,
        by_operand,
        measures,
        roles,
        fingerprint: String::new(),
    };
    system.fingerprint = digest(&system.to_canonical_json());
    system
}

impl<S: Scalar> CombinationalSystem<S> {
    /// Returns true when every cost in every measure is nonnegative.
    pub fn costs_nonnegative(&self) -> bool {
        self.measures.iter().all(|m| {
            m.atom_costs.iter().flatten().all(|c| !c.is_negative())
                && m.op_costs.iter().flatten().all(|c| !c.is_negative())
                && m.reaction_overrides.values().all(|c| !c.is_negative())
                && m.context_overrides.values().all(|c| !c.is_negative())
        })
    }

    /// A copy with every cost of one measure multiplied by `factor`.
    pub fn scaled_measure(&self, measure: usize, factor: &S) -> CombinationalSystem<S> {
        let mut measures = self.measures.clone();
        let m = &mut measures[measure];
        for c in m.atom_costs.iter_mut().flatten() {
            *c = c.clone() * factor.clone();
        }
        for c in m.op_costs.iter_mut().flatten() {
            *c = c.clone() * factor.clone();
        }
        for c in m.reaction_overrides.values_mut() {
            *c = c.clone() * factor.clone();
        }
        for c in m.context_overrides.values_mut() {
            *c = c.clone() * factor.clone();
        }
        assemble(
            self.entities.clone(),
            self.atoms.clone(),
            self.identity,
            self.operators.clone(),
            self.reactions.clone(),
            measures,
            self.roles.clone(),
        )
    }

    /// A copy with one extra explicit reaction (no cost override).
    pub fn with_extra_reaction(&self, reaction: Reaction) -> Result<CombinationalSystem<S>> {
        if self.explicit_reaction(reaction.op, reaction.left, reaction.right).is_some() {
            return Err(Error::InvalidReaction {
                path: "reactions".into(),
                message: "duplicate reaction".into(),
            });
        }
        if let Some(&p) = reaction.products.iter().find(|&&p| self.atoms[p]) {
            return Err(Error::AtomProducible { path: "reactions".into(), atom: self.name(p).to_string() });
        }
        let mut reactions = self.reactions.clone();
        reactions.push(reaction);
        Ok(assemble(
            self.entities.clone(),
            self.atoms.clone(),
            self.identity,
            self.operators.clone(),
            reactions,
            self.measures.clone(),
            self.roles.clone(),
        ))
    }

    /// A copy where `edit` may rewrite the measures in place.
    pub fn with_measures(
        &self,
        edit: impl FnOnce(&mut Vec<MeasureSpec<S>>),
    ) -> CombinationalSystem<S> {
        let mut measures = self.measures.clone();
        edit(&mut measures);
        assemble(
            self.entities.clone(),
            self.atoms.clone(),
            self.identity,
            self.operators.clone(),
            self.reactions.clone(),
            measures,
            self.roles.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use crate::Rational;
    use num_traits::Zero;

    #[test]
    fn identity_products_are_implicit() {
        let sys = crate::fixtures::toy1();
        let e = sys.identity();
        let a = sys.entity("a").unwrap();
        let cat = sys.operator("cat").unwrap();
        assert_eq!(sys.products(cat, a, e), Some(vec![a]));
        assert_eq!(sys.products(cat, e, a), Some(vec![a]));
        assert_eq!(sys.reaction_cost(0, cat, a, e, e), Some(Rational::zero()));
    }

    #[test]
    fn measure_selector_accepts_id_or_index() {
        let sys = crate::fixtures::toy2();
        assert_eq!(sys.measure("m2").unwrap(), 1);
        assert_eq!(sys.measure("1").unwrap(), 0);
        assert!(sys.measure("m9").is_err());
    }
}
