//! Factories for the builtin test systems and the shipped fixtures.

use std::collections::BTreeSet;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CombinationalSystem, MeasureDraft, SystemBuilder};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinFamily {
    StringConcat,
    PerturbedConcat,
    GammaSystem,
    Toy1,
    Toy2,
    Str1,
    Filtration,
    SingleReaction,
}

impl BuiltinFamily {
    pub const ALL: [BuiltinFamily; 8] = [
        BuiltinFamily::StringConcat,
        BuiltinFamily::PerturbedConcat,
        BuiltinFamily::GammaSystem,
        BuiltinFamily::Toy1,
        BuiltinFamily::Toy2,
        BuiltinFamily::Str1,
        BuiltinFamily::Filtration,
        BuiltinFamily::SingleReaction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinFamily::StringConcat => "string-concat",
            BuiltinFamily::PerturbedConcat => "perturbed-concat",
            BuiltinFamily::GammaSystem => "gamma-system",
            BuiltinFamily::Toy1 => "toy1",
            BuiltinFamily::Toy2 => "toy2",
            BuiltinFamily::Str1 => "str1",
            BuiltinFamily::Filtration => "filtration",
            BuiltinFamily::SingleReaction => "single-reaction",
        }
    }
}

impl FromStr for BuiltinFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown family `{s}`")))
    }
}

#[derive(Clone, Debug)]
pub struct GenerateParams<S> {
    pub alphabet: Vec<char>,
    pub max_len: usize,
    pub atom_cost: S,
    pub op_cost: S,
    /// Operator cost in the extended measure; defaults to half of `op_cost`.
    pub ext_op_cost: Option<S>,
    /// Per-reaction jitter bound for `perturbed-concat`; jitter lies in `[0, amplitude]`.
    pub amplitude: S,
    pub seed: u64,
    /// Maximum number of leaves of an application tree in `gamma-system`.
    pub depth: usize,
    pub gamma_cost: S,
    pub gamma_op_cost: S,
    pub entity_cap: usize,
}

impl<S: Scalar> Default for GenerateParams<S> {
    fn default() -> Self {
        GenerateParams {
            alphabet: vec!['a', 'b'],
            max_len: 4,
            atom_cost: S::one(),
            op_cost: S::one(),
            ext_op_cost: None,
            amplitude: S::zero(),
            seed: 0,
            depth: 3,
            gamma_cost: S::one(),
            gamma_op_cost: S::one(),
            entity_cap: 4096,
        }
    }
}

const RESERVED: [char; 9] = ['e', '@', 'G', 'L', 'M', '(', ')', ',', '#'];

fn check_params<S: Scalar>(p: &GenerateParams<S>) -> Result<()> {
    if p.alphabet.is_empty() {
        return Err(Error::Parameter("alphabet must be non-empty".into()));
    }
    let distinct: BTreeSet<char> = p.alphabet.iter().copied().collect();
    if distinct.len() != p.alphabet.len() {
        return Err(Error::Parameter("alphabet letters must be distinct".into()));
    }
    if let Some(c) = p.alphabet.iter().find(|c| RESERVED.contains(c) || c.is_whitespace() || c.is_control()) {
        return Err(Error::Parameter(format!("alphabet letter `{c}` is reserved")));
    }
    if p.max_len == 0 || p.depth == 0 {
        return Err(Error::Parameter("max length and depth must be at least 1".into()));
    }
    let costs = [&p.atom_cost, &p.op_cost, &p.amplitude, &p.gamma_cost, &p.gamma_op_cost];
    if costs.iter().any(|c| c.is_negative()) || p.ext_op_cost.as_ref().is_some_and(|c| c.is_negative()) {
        return Err(Error::Parameter("costs and amplitude must be nonnegative".into()));
    }
    Ok(())
}

pub fn generate_builtin<S: Scalar>(
    family: BuiltinFamily,
    params: &GenerateParams<S>,
) -> Result<CombinationalSystem<S>> {
    match family {
        BuiltinFamily::StringConcat => string_concat(params, false),
        BuiltinFamily::PerturbedConcat => string_concat(params, true),
        BuiltinFamily::GammaSystem => gamma_system(params),
        BuiltinFamily::Toy1 => toy1(),
        BuiltinFamily::Toy2 => toy2(),
        BuiltinFamily::Str1 => str1(),
        BuiltinFamily::Filtration => filtration(),
        BuiltinFamily::SingleReaction => single_reaction(),
    }
}

fn int<S: Scalar>(n: i64) -> S {
    S::from_ratio(n, 1)
}

fn measure<S: Scalar>(
    id: &str,
    ops: &[(&str, S)],
    atoms: &[(&str, S)],
) -> MeasureDraft<S> {
    let mut m = MeasureDraft::new(id);
    m.operators = ops.iter().map(|(o, _)| o.to_string()).collect();
    m.op_costs = ops.iter().map(|(o, c)| (o.to_string(), c.clone())).collect();
    m.atom_costs = atoms.iter().map(|(a, c)| (a.to_string(), c.clone())).collect();
    m
}

/// All strings over `alphabet` of length `1..=max_len`, by length then letter order.
fn strings_up_to(alphabet: &[char], max_len: usize, cap: usize) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for s in &layer {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        if out.len() + 1 > cap {
            return Err(Error::CapExceeded { what: "entity", cap, actual: out.len() + 1 });
        }
        layer = next;
    }
    Ok(out)
}

fn string_concat<S: Scalar>(p: &GenerateParams<S>, perturb: bool) -> Result<CombinationalSystem<S>> {
    check_params(p)?;
    let strings = strings_up_to(&p.alphabet, p.max_len, p.entity_cap)?;
    let mut b = SystemBuilder::new("e");
    for s in &strings {
        if s.chars().count() == 1 {
            b.atom(s.clone());
        } else {
            b.entity(s.clone());
        }
    }
    b.operator("cat");
    let universe: BTreeSet<&str> = strings.iter().map(String::as_str).collect();
    let mut pairs = Vec::new();
    for x in &strings {
        for y in &strings {
            let xy = format!("{x}{y}");
            if universe.contains(xy.as_str()) {
                b.reaction("cat", x, y, &[&xy]);
                pairs.push((x.clone(), y.clone()));
            }
        }
    }
    let ext = p.ext_op_cost.clone().unwrap_or_else(|| p.op_cost.clone() / int::<S>(2));
    let atoms: Vec<(&str, S)> = strings
        .iter()
        .filter(|s| s.chars().count() == 1)
        .map(|s| (s.as_str(), p.atom_cost.clone()))
        .collect();
    let mut m1 = measure("m1", &[("cat", p.op_cost.clone())], &atoms);
    let mut m2 = measure("m2", &[("cat", ext.clone())], &atoms);
    if perturb {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        for (m, base) in [(&mut m1, &p.op_cost), (&mut m2, &ext)] {
            for (x, y) in &pairs {
                let k: i64 = rng.gen_range(0..=16);
                if k != 0 && !p.amplitude.is_zero() {
                    let jitter = p.amplitude.clone() * S::from_ratio(k, 16);
                    m.reaction_overrides.push((
                        "cat".into(),
                        x.clone(),
                        y.clone(),
                        base.clone() + jitter,
                    ));
                }
            }
        }
    }
    b.measure(m1).measure(m2);
    b.build()
}

/// Plain application trees in prefix form: atoms are letters, `@xy` applies `x` to `y`.
fn application_trees(alphabet: &[char], max_leaves: usize, cap: usize) -> Result<Vec<Vec<String>>> {
    // by_leaves[n] = trees with exactly n leaves
    let mut by_leaves: Vec<Vec<String>> = vec![Vec::new(); max_leaves + 1];
    by_leaves[1] = alphabet.iter().map(|c| c.to_string()).collect();
    let mut total = by_leaves[1].len();
    for n in 2..=max_leaves {
        let mut layer = Vec::new();
        for k in 1..n {
            for l in &by_leaves[k] {
                for r in &by_leaves[n - k] {
                    layer.push(format!("@{l}{r}"));
                }
            }
        }
        total += layer.len();
        if total > cap {
            return Err(Error::CapExceeded { what: "entity", cap, actual: total });
        }
        by_leaves[n] = layer;
    }
    Ok(by_leaves)
}

fn gamma_system<S: Scalar>(p: &GenerateParams<S>) -> Result<CombinationalSystem<S>> {
    check_params(p)?;
    let by_leaves = application_trees(&p.alphabet, p.depth, p.entity_cap)?;
    let leaves_of: std::collections::HashMap<&str, usize> = by_leaves
        .iter()
        .enumerate()
        .flat_map(|(n, ts)| ts.iter().map(move |t| (t.as_str(), n)))
        .collect();
    let trees: Vec<&String> = by_leaves.iter().flatten().collect();

    let mut b = SystemBuilder::new("e");
    for t in &trees {
        if leaves_of[t.as_str()] == 1 {
            b.atom(t.as_str());
        } else {
            b.entity(t.as_str());
        }
    }
    b.atom("G");
    b.operator("app").operator("lift").operator("bind");
    b.gamma("G", "lift", "bind");

    for x in &trees {
        for y in &trees {
            if leaves_of[x.as_str()] + leaves_of[y.as_str()] <= p.depth {
                b.reaction("app", x, y, &[&format!("@{x}{y}")]);
            }
        }
    }

    // Rebracketing machinery: x app ((G lift w) bind v) = (x app w) app v.
    let mut lifted = BTreeSet::new();
    let mut bound = BTreeSet::new();
    let mut law = Vec::new();
    for x in &trees {
        for w in &trees {
            for v in &trees {
                let n = leaves_of[x.as_str()] + leaves_of[w.as_str()] + leaves_of[v.as_str()];
                if n <= p.depth {
                    lifted.insert((*w).clone());
                    bound.insert(((*w).clone(), (*v).clone()));
                    law.push((x.to_string(), format!("M{w}{v}"), format!("@@{x}{w}{v}")));
                }
            }
        }
    }
    for w in &lifted {
        b.entity(format!("L{w}"));
    }
    for (w, v) in &bound {
        b.entity(format!("M{w}{v}"));
    }
    if b.entity_count() > p.entity_cap {
        return Err(Error::CapExceeded { what: "entity", cap: p.entity_cap, actual: b.entity_count() });
    }
    for w in &lifted {
        b.reaction("lift", "G", w, &[&format!("L{w}")]);
    }
    for (w, v) in &bound {
        b.reaction("bind", &format!("L{w}"), v, &[&format!("M{w}{v}")]);
    }
    for (x, m, z) in &law {
        b.reaction("app", x, m, &[z]);
    }

    let ext = p.ext_op_cost.clone().unwrap_or_else(|| p.op_cost.clone() / int::<S>(2));
    let mut atoms: Vec<(&str, S)> = by_leaves[1].iter().map(|a| (a.as_str(), p.atom_cost.clone())).collect();
    atoms.push(("G", p.gamma_cost.clone()));
    let g = p.gamma_op_cost.clone();
    b.measure(measure(
        "m1",
        &[("app", p.op_cost.clone()), ("lift", g.clone()), ("bind", g.clone())],
        &atoms,
    ));
    b.measure(measure("m2", &[("app", ext), ("lift", g.clone()), ("bind", g)], &atoms));
    b.build()
}

fn toy1<S: Scalar>() -> Result<CombinationalSystem<S>> {
    let mut b = SystemBuilder::new("e");
    b.atom("a").atom("b").entity("ab").entity("ba").entity("aba");
    b.operator("cat");
    b.reaction("cat", "a", "b", &["ab"]);
    b.reaction("cat", "b", "a", &["ba"]);
    b.reaction("cat", "ab", "a", &["aba"]);
    b.reaction("cat", "a", "ba", &["aba"]);
    b.measure(measure("m1", &[("cat", int(1))], &[("a", int(1)), ("b", int(1))]));
    b.build()
}

fn toy2<S: Scalar>() -> Result<CombinationalSystem<S>> {
    let mut b = SystemBuilder::new("e");
    b.atom("a").atom("b").entity("ab").entity("aa").entity("aaaa");
    b.operator("cat").operator("sq");
    b.reaction("cat", "a", "b", &["ab"]);
    b.reaction("cat", "a", "a", &["aa"]);
    b.reaction("cat", "aa", "aa", &["aaaa"]);
    b.reaction("sq", "aa", "aa", &["aaaa"]);
    let atoms = [("a", int(1)), ("b", int(1))];
    b.measure(measure("m1", &[("cat", int(1)), ("sq", int(3))], &atoms));
    b.measure(measure("m2", &[("cat", int(2)), ("sq", int(1))], &atoms));
    b.build()
}

fn str1<S: Scalar>() -> Result<CombinationalSystem<S>> {
    let mut strings = strings_up_to(&['a', 'b'], 3, usize::MAX)?;
    strings.extend((4..=8).map(|n| "a".repeat(n)));
    let universe: BTreeSet<&str> = strings.iter().map(String::as_str).collect();
    let mut b = SystemBuilder::new("e");
    for s in &strings {
        if s.len() == 1 {
            b.atom(s.clone());
        } else {
            b.entity(s.clone());
        }
    }
    b.operator("cat").operator("sq");
    for x in &strings {
        for y in &strings {
            let xy = format!("{x}{y}");
            if universe.contains(xy.as_str()) {
                b.reaction("cat", x, y, &[&xy]);
            }
        }
    }
    for s in &strings {
        let ss = format!("{s}{s}");
        if universe.contains(ss.as_str()) {
            b.reaction("sq", s, s, &[&ss]);
        }
    }
    let atoms = [("a", int(1)), ("b", int(1))];
    b.measure(measure("m1", &[("cat", int(1))], &atoms));
    b.measure(measure("m2", &[("cat", int(1)), ("sq", S::from_ratio(1, 2))], &atoms));
    b.build()
}

fn filtration<S: Scalar>() -> Result<CombinationalSystem<S>> {
    let mut b = SystemBuilder::new("e");
    b.atom("x").atom("y").entity("a").entity("b");
    b.operator("mix").operator("filt").filtration("filt");
    b.reaction("mix", "x", "y", &["a", "b"]);
    for (l, r) in [("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")] {
        let out = if l == r { l } else { "e" };
        b.reaction("filt", l, r, &[out]);
    }
    b.measure(measure(
        "m1",
        &[("mix", int(1)), ("filt", S::from_ratio(1, 2))],
        &[("x", int(1)), ("y", int(1))],
    ));
    b.build()
}

fn single_reaction<S: Scalar>() -> Result<CombinationalSystem<S>> {
    let mut b = SystemBuilder::new("e");
    b.atom("a").atom("b").entity("ab");
    b.operator("cat").operator("fast");
    b.reaction("cat", "a", "b", &["ab"]);
    let atoms = [("a", int(1)), ("b", int(1))];
    b.measure(measure("m1", &[("cat", int(2))], &atoms));
    b.measure(measure("m2", &[("cat", int(1)), ("fast", int(1))], &atoms));
    b.build()
}

/// Shape of [`random_system`] output.
#[derive(Clone, Debug)]
pub struct RandomParams {
    pub max_entities: usize,
    pub max_operators: usize,
    pub max_measures: usize,
    pub max_denominator: i64,
    pub context_overrides: bool,
    pub multi_output: bool,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_entities: 12,
            max_operators: 3,
            max_measures: 3,
            max_denominator: 16,
            context_overrides: false,
            multi_output: true,
        }
    }
}

/// A small random system for property tests: atoms `a0..`, derived
/// entities `x0..`, operators `o0..`, nested operator sets and rational
/// costs with bounded denominators.
pub fn random_system<S: Scalar>(seed: u64, p: &RandomParams) -> Result<CombinationalSystem<S>> {
    if p.max_entities < 3 || p.max_operators == 0 || p.max_measures == 0 || p.max_denominator < 1 {
        return Err(Error::Parameter("random system bounds too small".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=p.max_entities);
    let atoms = rng.gen_range(1..=(n - 2).min(3));
    let derived = n - 1 - atoms;
    let ops = rng.gen_range(1..=p.max_operators);
    let atom_names: Vec<String> = (0..atoms).map(|i| format!("a{i}")).collect();
    let derived_names: Vec<String> = (0..derived).map(|i| format!("x{i}")).collect();
    let op_names: Vec<String> = (0..ops).map(|i| format!("o{i}")).collect();
    let operands: Vec<&String> = atom_names.iter().chain(&derived_names).collect();

    let mut b = SystemBuilder::new("e");
    for a in &atom_names {
        b.atom(a.as_str());
    }
    for x in &derived_names {
        b.entity(x.as_str());
    }
    for o in &op_names {
        b.operator(o.as_str());
    }
    let mut seen = BTreeSet::new();
    let mut reactions = Vec::new();
    for (i, x) in derived_names.iter().enumerate() {
        let count = rng.gen_range(0..=3);
        for _ in 0..count {
            let op = rng.gen_range(0..ops);
            let l = rng.gen_range(0..operands.len());
            let r = rng.gen_range(0..operands.len());
            if !seen.insert((op, l, r)) {
                continue;
            }
            let mut products = vec![x.clone()];
            if p.multi_output && derived > 1 && rng.gen_bool(0.15) {
                let other = rng.gen_range(0..derived);
                if other != i {
                    products.push(derived_names[other].clone());
                }
            }
            reactions.push((op, l, r, products));
        }
    }
    for (op, l, r, products) in &reactions {
        let refs: Vec<&str> = products.iter().map(String::as_str).collect();
        b.reaction(&op_names[*op], operands[*l], operands[*r], &refs);
    }

    let cost = |rng: &mut ChaCha8Rng| {
        let d = rng.gen_range(1..=p.max_denominator);
        S::from_ratio(rng.gen_range(0..=3 * d), d)
    };
    let measures = rng.gen_range(1..=p.max_measures);
    let mut base: Vec<usize> = (0..ops).filter(|_| rng.gen_bool(0.6)).collect();
    if base.is_empty() {
        base.push(rng.gen_range(0..ops));
    }
    for m in 0..measures {
        let mut set = base.clone();
        if m > 0 {
            set.extend((0..ops).filter(|o| !base.contains(o) && rng.gen_bool(0.5)));
            set.sort_unstable();
        }
        let mut draft = MeasureDraft::new(format!("m{}", m + 1));
        draft.operators = set.iter().map(|&o| op_names[o].clone()).collect();
        draft.atom_costs = atom_names.iter().map(|a| (a.clone(), cost(&mut rng))).collect();
        draft.op_costs = set.iter().map(|&o| (op_names[o].clone(), cost(&mut rng))).collect();
        for (op, l, r, _) in &reactions {
            if set.contains(op) && rng.gen_bool(0.25) {
                draft.reaction_overrides.push((op_names[*op].clone(), operands[*l].clone(), operands[*r].clone(), cost(&mut rng)));
            }
            if p.context_overrides && set.contains(op) && rng.gen_bool(0.2) {
                let w = operands[rng.gen_range(0..operands.len())].clone();
                draft.context_overrides.push((
                    op_names[*op].clone(),
                    operands[*l].clone(),
                    operands[*r].clone(),
                    w,
                    cost(&mut rng),
                ));
            }
        }
        b.measure(draft);
    }
    b.build()
}
