//! JSON system documents: loading with path-qualified errors, validation,
//! and canonical serialization (sorted keys, arrays in declaration order).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{
    assemble, is_valid_token, CombinationalSystem, GammaRole, MeasureDraft, MeasureSpec, Reaction,
    Roles, SystemBuilder,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Unvalidated, name-based form shared by the loader and the builder.
pub(crate) struct RawSystem<S> {
    entities: Vec<String>,
    atoms: Vec<String>,
    identity: String,
    operators: Vec<String>,
    reactions: Vec<(String, String, String, Vec<String>)>,
    measures: Vec<MeasureDraft<S>>,
    filtration: Vec<String>,
    gamma: Option<(String, String, String)>,
}

impl<S: Scalar> RawSystem<S> {
    pub(crate) fn from_builder(b: &SystemBuilder<S>) -> Self {
        RawSystem {
            entities: b.entities.clone(),
            atoms: b.atoms.clone(),
            identity: b.identity.clone(),
            operators: b.operators.clone(),
            reactions: b.reactions.clone(),
            measures: b.measures.clone(),
            filtration: b.filtration.clone(),
            gamma: b.gamma.clone(),
        }
    }
}

/// Parses and validates a system document.
pub fn load_system<S: Scalar>(document: &str) -> Result<CombinationalSystem<S>> {
    let value: Value = serde_json::from_str(document)
        .map_err(|e| Error::schema("$", format!("invalid JSON: {e}")))?;
    let raw = parse_document(&value)?;
    validate(&raw)
}

pub fn load_system_file<S: Scalar>(path: impl AsRef<Path>) -> Result<CombinationalSystem<S>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    load_system(&text)
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::schema(format!("{path}.{key}"), "missing required key"))
}

fn as_object<'a>(value: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    value.as_object().ok_or_else(|| Error::schema(path, "expected object"))
}

fn as_array<'a>(value: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    value.as_array().ok_or_else(|| Error::schema(path, "expected array"))
}

fn as_token(value: &Value, path: &str) -> Result<String> {
    let s = value.as_str().ok_or_else(|| Error::schema(path, "expected string"))?;
    if !is_valid_token(s) {
        return Err(Error::schema(path, format!("invalid token `{s}`")));
    }
    Ok(s.to_string())
}

fn token_list(value: &Value, path: &str) -> Result<Vec<String>> {
    as_array(value, path)?
        .iter()
        .enumerate()
        .map(|(i, v)| as_token(v, &format!("{path}[{i}]")))
        .collect()
}

fn as_cost<S: Scalar>(value: &Value, path: &str) -> Result<S> {
    let parsed = match value {
        Value::String(s) => S::parse_exact(s),
        Value::Number(n) if n.is_i64() => n.as_i64().map(|v| S::from_ratio(v, 1)),
        Value::Number(n) if n.is_u64() => n.as_u64().map(|v| S::from_ratio(v as i64, 1)),
        _ => None,
    };
    let cost =
        parsed.ok_or_else(|| Error::schema(path, "expected rational `p/q` string or integer"))?;
    if cost.is_negative() {
        return Err(Error::NegativeCost { path: path.to_string() });
    }
    Ok(cost)
}

fn cost_map<S: Scalar>(value: &Value, path: &str) -> Result<Vec<(String, S)>> {
    let obj = as_object(value, path)?;
    let mut out = Vec::with_capacity(obj.len());
    for (k, v) in obj {
        out.push((k.clone(), as_cost(v, &format!("{path}.{k}"))?));
    }
    Ok(out)
}

fn parse_document<S: Scalar>(value: &Value) -> Result<RawSystem<S>> {
    let root = as_object(value, "$")?;
    const KNOWN: [&str; 7] =
        ["entities", "atoms", "identity", "operators", "reactions", "measures", "roles"];
    if let Some(k) = root.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(Error::schema(format!("$.{k}"), "unknown key"));
    }
    let entities = token_list(field(root, "entities", "$")?, "$.entities")?;
    let atoms = token_list(field(root, "atoms", "$")?, "$.atoms")?;
    let identity = as_token(field(root, "identity", "$")?, "$.identity")?;
    let operators = token_list(field(root, "operators", "$")?, "$.operators")?;

    let mut reactions = Vec::new();
    for (i, r) in as_array(field(root, "reactions", "$")?, "$.reactions")?.iter().enumerate() {
        let path = format!("$.reactions[{i}]");
        let obj = as_object(r, &path)?;
        reactions.push((
            as_token(field(obj, "op", &path)?, &format!("{path}.op"))?,
            as_token(field(obj, "left", &path)?, &format!("{path}.left"))?,
            as_token(field(obj, "right", &path)?, &format!("{path}.right"))?,
            token_list(field(obj, "products", &path)?, &format!("{path}.products"))?,
        ));
    }

    let mut measures = Vec::new();
    for (i, m) in as_array(field(root, "measures", "$")?, "$.measures")?.iter().enumerate() {
        let path = format!("$.measures[{i}]");
        let obj = as_object(m, &path)?;
        let mut draft = MeasureDraft::new(as_token(field(obj, "id", &path)?, &format!("{path}.id"))?);
        draft.operators = token_list(field(obj, "operators", &path)?, &format!("{path}.operators"))?;
        draft.atom_costs = cost_map(field(obj, "atom_costs", &path)?, &format!("{path}.atom_costs"))?;
        draft.op_costs = cost_map(field(obj, "op_costs", &path)?, &format!("{path}.op_costs"))?;
        if let Some(list) = obj.get("reaction_cost_overrides") {
            let lpath = format!("{path}.reaction_cost_overrides");
            for (k, o) in as_array(list, &lpath)?.iter().enumerate() {
                let opath = format!("{lpath}[{k}]");
                let oo = as_object(o, &opath)?;
                draft.reaction_overrides.push((
                    as_token(field(oo, "op", &opath)?, &format!("{opath}.op"))?,
                    as_token(field(oo, "left", &opath)?, &format!("{opath}.left"))?,
                    as_token(field(oo, "right", &opath)?, &format!("{opath}.right"))?,
                    as_cost(field(oo, "cost", &opath)?, &format!("{opath}.cost"))?,
                ));
            }
        }
        if let Some(list) = obj.get("context_cost_overrides") {
            let lpath = format!("{path}.context_cost_overrides");
            for (k, o) in as_array(list, &lpath)?.iter().enumerate() {
                let opath = format!("{lpath}[{k}]");
                let oo = as_object(o, &opath)?;
                draft.context_overrides.push((
                    as_token(field(oo, "op", &opath)?, &format!("{opath}.op"))?,
                    as_token(field(oo, "left", &opath)?, &format!("{opath}.left"))?,
                    as_token(field(oo, "right", &opath)?, &format!("{opath}.right"))?,
                    as_token(field(oo, "context", &opath)?, &format!("{opath}.context"))?,
                    as_cost(field(oo, "cost", &opath)?, &format!("{opath}.cost"))?,
                ));
            }
        }
        measures.push(draft);
    }

    let mut filtration = Vec::new();
    let mut gamma = None;
    if let Some(roles) = root.get("roles") {
        let obj = as_object(roles, "$.roles")?;
        if let Some(f) = obj.get("filtration") {
            filtration = token_list(f, "$.roles.filtration")?;
        }
        if let Some(g) = obj.get("gamma") {
            let go = as_object(g, "$.roles.gamma")?;
            gamma = Some((
                as_token(field(go, "entity", "$.roles.gamma")?, "$.roles.gamma.entity")?,
                as_token(field(go, "alpha", "$.roles.gamma")?, "$.roles.gamma.alpha")?,
                as_token(field(go, "beta", "$.roles.gamma")?, "$.roles.gamma.beta")?,
            ));
        }
    }

    Ok(RawSystem { entities, atoms, identity, operators, reactions, measures, filtration, gamma })
}

fn index_tokens(tokens: &[String], path: &str) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(tokens.len());
    for (i, t) in tokens.iter().enumerate() {
        if !is_valid_token(t) {
            return Err(Error::schema(format!("{path}[{i}]"), format!("invalid token `{t}`")));
        }
        if index.insert(t.clone(), i).is_some() {
            return Err(Error::DuplicateId { path: format!("{path}[{i}]"), id: t.clone() });
        }
    }
    Ok(index)
}

fn lookup(index: &HashMap<String, usize>, name: &str, kind: &'static str, path: String) -> Result<usize> {
    index
        .get(name)
        .copied()
        .ok_or_else(|| Error::UnknownId { path, kind, id: name.to_string() })
}

pub(crate) fn validate<S: Scalar>(raw: &RawSystem<S>) -> Result<CombinationalSystem<S>> {
    let entity_index = index_tokens(&raw.entities, "$.entities")?;
    let operator_index = index_tokens(&raw.operators, "$.operators")?;
    let n = raw.entities.len();
    let identity = lookup(&entity_index, &raw.identity, "entity", "$.identity".into())?;

    let mut atoms = vec![false; n];
    for (i, a) in raw.atoms.iter().enumerate() {
        let path = format!("$.atoms[{i}]");
        let idx = lookup(&entity_index, a, "entity", path.clone())?;
        if idx == identity {
            return Err(Error::schema(path, "the identity cannot be an atom"));
        }
        if atoms[idx] {
            return Err(Error::DuplicateId { path, id: a.clone() });
        }
        atoms[idx] = true;
    }

    let mut reactions = Vec::with_capacity(raw.reactions.len());
    let mut seen = HashSet::new();
    for (i, (op, l, r, products)) in raw.reactions.iter().enumerate() {
        let path = format!("$.reactions[{i}]");
        let op = lookup(&operator_index, op, "operator", format!("{path}.op"))?;
        let left = lookup(&entity_index, l, "entity", format!("{path}.left"))?;
        let right = lookup(&entity_index, r, "entity", format!("{path}.right"))?;
        if left == identity || right == identity {
            return Err(Error::InvalidReaction {
                path,
                message: "reactions with the identity as operand are implicit".into(),
            });
        }
        if products.is_empty() {
            return Err(Error::InvalidReaction { path, message: "empty product list".into() });
        }
        let mut prods = Vec::with_capacity(products.len());
        for (k, p) in products.iter().enumerate() {
            let ppath = format!("{path}.products[{k}]");
            let idx = lookup(&entity_index, p, "entity", ppath.clone())?;
            if atoms[idx] {
                return Err(Error::AtomProducible { path: ppath, atom: p.clone() });
            }
            prods.push(idx);
        }
        if !seen.insert((op, left, right)) {
            return Err(Error::InvalidReaction {
                path,
                message: "duplicate reaction for (op,left,right)".into(),
            });
        }
        reactions.push(Reaction { op, left, right, products: prods });
    }
    let reaction_set: HashSet<(usize, usize, usize)> =
        reactions.iter().map(|r| (r.op, r.left, r.right)).collect();

    if raw.measures.is_empty() {
        return Err(Error::schema("$.measures", "at least one measure is required"));
    }
    let mut measure_ids = HashSet::new();
    let mut measures = Vec::with_capacity(raw.measures.len());
    for (j, m) in raw.measures.iter().enumerate() {
        let path = format!("$.measures[{j}]");
        if !is_valid_token(&m.id) {
            return Err(Error::schema(format!("{path}.id"), "invalid token"));
        }
        if !measure_ids.insert(m.id.clone()) {
            return Err(Error::DuplicateId { path: format!("{path}.id"), id: m.id.clone() });
        }
        let mut ops = vec![false; raw.operators.len()];
        for (k, o) in m.operators.iter().enumerate() {
            let idx = lookup(&operator_index, o, "operator", format!("{path}.operators[{k}]"))?;
            ops[idx] = true;
        }
        let mut atom_costs: Vec<Option<S>> = vec![None; n];
        for (a, c) in &m.atom_costs {
            let cpath = format!("{path}.atom_costs.{a}");
            let idx = lookup(&entity_index, a, "entity", cpath.clone())?;
            if !atoms[idx] {
                return Err(Error::schema(cpath, "cost declared for a non-atom"));
            }
            if c.is_negative() {
                return Err(Error::NegativeCost { path: cpath });
            }
            atom_costs[idx] = Some(c.clone());
        }
        if let Some(missing) = (0..n).find(|&x| atoms[x] && atom_costs[x].is_none()) {
            return Err(Error::schema(
                format!("{path}.atom_costs"),
                format!("missing cost for atom `{}`", raw.entities[missing]),
            ));
        }
        let mut op_costs: Vec<Option<S>> = vec![None; raw.operators.len()];
        for (o, c) in &m.op_costs {
            let cpath = format!("{path}.op_costs.{o}");
            let idx = lookup(&operator_index, o, "operator", cpath.clone())?;
            if !ops[idx] {
                return Err(Error::schema(cpath, "cost declared for an operator outside the measure"));
            }
            if c.is_negative() {
                return Err(Error::NegativeCost { path: cpath });
            }
            op_costs[idx] = Some(c.clone());
        }
        if let Some(missing) = (0..raw.operators.len()).find(|&o| ops[o] && op_costs[o].is_none()) {
            return Err(Error::schema(
                format!("{path}.op_costs"),
                format!("missing cost for operator `{}`", raw.operators[missing]),
            ));
        }
        let mut reaction_overrides = HashMap::new();
        for (k, (o, l, r, c)) in m.reaction_overrides.iter().enumerate() {
            let opath = format!("{path}.reaction_cost_overrides[{k}]");
            let key = (
                lookup(&operator_index, o, "operator", format!("{opath}.op"))?,
                lookup(&entity_index, l, "entity", format!("{opath}.left"))?,
                lookup(&entity_index, r, "entity", format!("{opath}.right"))?,
            );
            if !reaction_set.contains(&key) || !ops[key.0] {
                return Err(Error::schema(opath, "override for an undeclared or out-of-measure reaction"));
            }
            if c.is_negative() {
                return Err(Error::NegativeCost { path: format!("{opath}.cost") });
            }
            if reaction_overrides.insert(key, c.clone()).is_some() {
                return Err(Error::schema(opath, "duplicate override"));
            }
        }
        let mut context_overrides = HashMap::new();
        for (k, (o, l, r, w, c)) in m.context_overrides.iter().enumerate() {
            let opath = format!("{path}.context_cost_overrides[{k}]");
            let key = (
                lookup(&operator_index, o, "operator", format!("{opath}.op"))?,
                lookup(&entity_index, l, "entity", format!("{opath}.left"))?,
                lookup(&entity_index, r, "entity", format!("{opath}.right"))?,
                lookup(&entity_index, w, "entity", format!("{opath}.context"))?,
            );
            if key.3 == identity {
                return Err(Error::schema(opath, "context overrides for the identity context are not allowed"));
            }
            if !reaction_set.contains(&(key.0, key.1, key.2)) || !ops[key.0] {
                return Err(Error::schema(opath, "override for an undeclared or out-of-measure reaction"));
            }
            if c.is_negative() {
                return Err(Error::NegativeCost { path: format!("{opath}.cost") });
            }
            if context_overrides.insert(key, c.clone()).is_some() {
                return Err(Error::schema(opath, "duplicate override"));
            }
        }
        measures.push(MeasureSpec {
            id: m.id.clone(),
            operators: ops,
            atom_costs,
            op_costs,
            reaction_overrides,
            context_overrides,
        });
    }
    let base_ops = measures[0].operators.clone();
    for (j, m) in measures.iter().enumerate().skip(1) {
        if let Some(op) = (0..base_ops.len()).find(|&o| base_ops[o] && !m.operators[o]) {
            return Err(Error::BaseContainment {
                path: format!("$.measures[{j}].operators"),
                measure: m.id.clone(),
                op: raw.operators[op].clone(),
            });
        }
    }

    let mut roles = Roles::default();
    for (k, f) in raw.filtration.iter().enumerate() {
        roles.filtration.push(lookup(&operator_index, f, "operator", format!("$.roles.filtration[{k}]"))?);
    }
    if let Some((g, a, b)) = &raw.gamma {
        roles.gamma = Some(GammaRole {
            entity: lookup(&entity_index, g, "entity", "$.roles.gamma.entity".into())?,
            alpha: lookup(&operator_index, a, "operator", "$.roles.gamma.alpha".into())?,
            beta: lookup(&operator_index, b, "operator", "$.roles.gamma.beta".into())?,
        });
    }

    Ok(assemble(
        raw.entities.clone(),
        atoms,
        identity,
        raw.operators.clone(),
        reactions,
        measures,
        roles,
    ))
}

impl<S: Scalar> CombinationalSystem<S> {
    /// Canonical JSON value: keys sorted, arrays in declaration order.
    pub fn to_json_value(&self) -> Value {
        let (atoms, measures) = self.raw_parts();
        let name = |x: usize| Value::String(self.name(x).to_string());
        let op_name = |o: usize| Value::String(self.op_name(o).to_string());
        let cost = |c: &S| Value::String(c.to_exact_string());

        let reactions: Vec<Value> = self
            .reactions()
            .iter()
            .map(|r| {
                json!({
                    "op": op_name(r.op),
                    "left": name(r.left),
                    "right": name(r.right),
                    "products": r.products.iter().map(|&p| name(p)).collect::<Vec<_>>(),
                })
            })
            .collect();

        // Overrides follow reaction declaration order, then context order.
        let reaction_order: HashMap<(usize, usize, usize), usize> = self
            .reactions()
            .iter()
            .enumerate()
            .map(|(i, r)| ((r.op, r.left, r.right), i))
            .collect();

        let measures_json: Vec<Value> = measures
            .iter()
            .map(|m| {
                let ops: Vec<Value> =
                    (0..self.operator_count()).filter(|&o| m.operators[o]).map(op_name).collect();
                let atom_costs: Map<String, Value> = (0..self.entity_count())
                    .filter(|&x| atoms[x])
                    .filter_map(|x| m.atom_costs[x].as_ref().map(|c| (self.name(x).to_string(), cost(c))))
                    .collect();
                let op_costs: Map<String, Value> = (0..self.operator_count())
                    .filter_map(|o| m.op_costs[o].as_ref().map(|c| (self.op_name(o).to_string(), cost(c))))
                    .collect();
                let mut ro: Vec<(&(usize, usize, usize), &S)> = m.reaction_overrides.iter().collect();
                ro.sort_by_key(|(k, _)| reaction_order[k]);
                let ro: Vec<Value> = ro
                    .into_iter()
                    .map(|(&(o, l, r), c)| {
                        json!({"op": op_name(o), "left": name(l), "right": name(r), "cost": cost(c)})
                    })
                    .collect();
                let mut co: Vec<(&(usize, usize, usize, usize), &S)> = m.context_overrides.iter().collect();
                co.sort_by_key(|(&(o, l, r, w), _)| (reaction_order[&(o, l, r)], w));
                let co: Vec<Value> = co
                    .into_iter()
                    .map(|(&(o, l, r, w), c)| {
                        json!({"op": op_name(o), "left": name(l), "right": name(r), "context": name(w), "cost": cost(c)})
                    })
                    .collect();
                json!({
                    "id": m.id,
                    "operators": ops,
                    "atom_costs": atom_costs,
                    "op_costs": op_costs,
                    "reaction_cost_overrides": ro,
                    "context_cost_overrides": co,
                })
            })
            .collect();

        let mut root: BTreeMap<&str, Value> = BTreeMap::new();
        root.insert("entities", Value::Array((0..self.entity_count()).map(name).collect()));
        root.insert("atoms", Value::Array(self.atoms().map(name).collect()));
        root.insert("identity", name(self.identity()));
        root.insert("operators", Value::Array((0..self.operator_count()).map(op_name).collect()));
        root.insert("reactions", Value::Array(reactions));
        root.insert("measures", Value::Array(measures_json));
        let roles = self.roles();
        if !roles.filtration.is_empty() || roles.gamma.is_some() {
            let mut r = Map::new();
            if !roles.filtration.is_empty() {
                r.insert(
                    "filtration".into(),
                    Value::Array(roles.filtration.iter().map(|&o| op_name(o)).collect()),
                );
            }
            if let Some(g) = &roles.gamma {
                r.insert(
                    "gamma".into(),
                    json!({"entity": name(g.entity), "alpha": op_name(g.alpha), "beta": op_name(g.beta)}),
                );
            }
            root.insert("roles", Value::Object(r));
        }
        serde_json::to_value(root).expect("map of values serializes")
    }

    /// Compact canonical serialization (used for fingerprints).
    pub fn to_canonical_json(&self) -> String {
        self.to_json_value().to_string()
    }

    /// Pretty canonical serialization with a trailing newline (fixture files).
    pub fn to_pretty_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("serializable");
        s.push('\n');
        s
    }
}
