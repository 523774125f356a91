//! Single-measure simplicity: the least fixpoint of the CoSM recursion over
//! the reaction hypergraph, its relative (context) forms, and a shared cache.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::expr::Expression;
use crate::cost::ExtCost;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::system::CombinationalSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelativeMode {
    /// The context is a zero-cost source that a derivation may consume once.
    FreeContext,
    /// The three-way minimum as printed, charging unconditional costs when the
    /// context is used directly as an operand.
    Literal,
}

impl RelativeMode {
    pub fn name(self) -> &'static str {
        match self {
            RelativeMode::FreeContext => "free",
            RelativeMode::Literal => "literal",
        }
    }
}

impl FromStr for RelativeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" | "free-context" => Ok(RelativeMode::FreeContext),
            "literal" => Ok(RelativeMode::Literal),
            _ => Err(Error::Parameter(format!("unknown relative mode `{s}`"))),
        }
    }
}

impl fmt::Display for RelativeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Reference to an entry of one of a table's layers.
pub type Slot = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Via {
    Atom,
    Identity,
    Context,
    Fire { op: usize, left: Slot, right: Slot },
}

#[derive(Clone, Debug)]
struct Layer<S> {
    value: Vec<Option<S>>,
    via: Vec<Option<Via>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DerivationStep {
    pub op: String,
    pub left: String,
    pub right: String,
    pub product: String,
}

/// Simplicity of every entity for one `(measure, context, mode)`.
#[derive(Clone, Debug)]
pub struct SimplicityTable<S> {
    pub measure: usize,
    pub context: usize,
    pub mode: RelativeMode,
    layers: Vec<Layer<S>>,
    result: Vec<Option<usize>>,
}

impl<S: Scalar> SimplicityTable<S> {
    pub fn value(&self, x: usize) -> ExtCost<S> {
        match self.result[x] {
            Some(l) => ExtCost::Finite(self.layers[l].value[x].clone().expect("settled")),
            None => ExtCost::Infinite,
        }
    }

    pub fn values(&self) -> Vec<ExtCost<S>> {
        (0..self.result.len()).map(|x| self.value(x)).collect()
    }

    pub fn len(&self) -> usize {
        self.result.len()
    }

    pub fn is_empty(&self) -> bool {
        self.result.is_empty()
    }

    /// A table restored from stored values; it carries no derivations.
    pub fn from_values(measure: usize, context: usize, mode: RelativeMode, values: Vec<ExtCost<S>>) -> Self {
        let n = values.len();
        let layer = Layer { value: values.into_iter().map(ExtCost::into_finite).collect(), via: vec![None; n] };
        let result = layer.value.iter().map(|v| v.as_ref().map(|_| 0)).collect();
        SimplicityTable { measure, context, mode, layers: vec![layer], result }
    }

    /// Overwrites one value; only meant for fault-injection tests.
    #[doc(hidden)]
    pub fn force_value(&mut self, x: usize, value: ExtCost<S>) {
        let l = self.result[x].unwrap_or(0);
        self.layers[l].value[x] = value.into_finite();
        self.result[x] = self.layers[l].value[x].as_ref().map(|_| l);
    }

    /// Post-order steps of a cost-minimal derivation tree of `x`; identity
    /// reactions are omitted. Empty for atoms, the identity, the context and
    /// underivable entities.
    pub fn derivation(&self, system: &CombinationalSystem<S>, x: usize) -> Vec<DerivationStep> {
        let mut out = Vec::new();
        if let Some(l) = self.result[x] {
            self.walk(system, (x, l), &mut out);
        }
        out
    }

    /// The cost-minimal derivation of `x` as an expression tree, identity
    /// operands included. `None` when `x` is underivable or the table was
    /// restored without derivations.
    pub fn witness_expression(&self, system: &CombinationalSystem<S>, x: usize) -> Option<Expression> {
        self.expression_at(system, (x, self.result[x]?))
    }

    fn expression_at(&self, system: &CombinationalSystem<S>, (x, l): Slot) -> Option<Expression> {
        match self.layers[l].via[x].as_ref()? {
            Via::Fire { op, left, right } => {
                let products = system.products(*op, left.0, right.0)?;
                let select = products.iter().position(|&p| p == x)? + 1;
                let a = self.expression_at(system, *left)?;
                let b = self.expression_at(system, *right)?;
                Some(Expression::node_select(*op, a, b, select))
            }
            _ => Some(Expression::leaf(x)),
        }
    }

    fn walk(&self, system: &CombinationalSystem<S>, (x, l): Slot, out: &mut Vec<DerivationStep>) {
        if let Some(Via::Fire { op, left, right }) = &self.layers[l].via[x] {
            self.walk(system, *left, out);
            self.walk(system, *right, out);
            let e = system.identity();
            if left.0 != e && right.0 != e {
                out.push(DerivationStep {
                    op: system.op_name(*op).to_string(),
                    left: system.name(left.0).to_string(),
                    right: system.name(right.0).to_string(),
                    product: system.name(x).to_string(),
                });
            }
        }
    }
}

struct Entry<S> {
    cost: S,
    entity: usize,
}

impl<S: Scalar> PartialEq for Entry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for Entry<S> {}

impl<S: Scalar> PartialOrd for Entry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Entry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then(self.entity.cmp(&other.entity))
    }
}

/// Knuth's generalization of Dijkstra: entities settle in cost order and each
/// settled entity lets `expand` propose candidates for reaction products.
fn settle<S: Scalar>(
    n: usize,
    seeds: Vec<(usize, S, Via)>,
    mut expand: impl FnMut(usize, &[Option<S>], &mut Vec<(usize, S, Via)>),
) -> Layer<S> {
    let mut best: Vec<Option<S>> = vec![None; n];
    let mut via: Vec<Option<Via>> = vec![None; n];
    let mut done: Vec<Option<S>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    let offer = |x: usize, c: S, v: Via, best: &mut Vec<Option<S>>, via: &mut Vec<Option<Via>>, heap: &mut BinaryHeap<Reverse<Entry<S>>>| {
        if best[x].as_ref().is_none_or(|b| c.total_cmp(b) == Ordering::Less) {
            best[x] = Some(c.clone());
            via[x] = Some(v);
            heap.push(Reverse(Entry { cost: c, entity: x }));
        }
    };
    for (x, c, v) in seeds {
        offer(x, c, v, &mut best, &mut via, &mut heap);
    }
    let mut candidates = Vec::new();
    while let Some(Reverse(Entry { cost, entity })) = heap.pop() {
        if done[entity].is_some() || best[entity].as_ref() != Some(&cost) {
            continue;
        }
        done[entity] = Some(cost);
        candidates.clear();
        expand(entity, &done, &mut candidates);
        for (x, c, v) in candidates.drain(..) {
            if done[x].is_none() {
                offer(x, c, v, &mut best, &mut via, &mut heap);
            }
        }
    }
    Layer { value: done, via }
}

fn base_seeds<S: Scalar>(system: &CombinationalSystem<S>, measure: usize) -> Vec<(usize, S, Via)> {
    let mut seeds = vec![(system.identity(), S::zero(), Via::Identity)];
    for a in system.atoms() {
        if let Some(c) = system.atom_cost(measure, a) {
            seeds.push((a, c.clone(), Via::Atom));
        }
    }
    seeds
}

/// Plain fixpoint with operator costs as seen from `context`.
fn plain_layer<S: Scalar>(
    system: &CombinationalSystem<S>,
    measure: usize,
    context: usize,
    layer: usize,
    seeds: Vec<(usize, S, Via)>,
) -> Layer<S> {
    let spec = system.measure_spec(measure);
    settle(system.entity_count(), seeds, |x, done, out| {
        for &ri in system.consumers(x) {
            let r = &system.reactions()[ri];
            if !spec.uses(r.op) {
                continue;
            }
            let (Some(l), Some(rc)) = (&done[r.left], &done[r.right]) else { continue };
            let cost = system
                .reaction_cost(measure, r.op, r.left, r.right, context)
                .expect("operator in measure");
            let total = l.clone() + rc.clone() + cost;
            for &p in &r.products {
                out.push((
                    p,
                    total.clone(),
                    Via::Fire { op: r.op, left: (r.left, layer), right: (r.right, layer) },
                ));
            }
        }
    })
}

fn check_indices<S: Scalar>(system: &CombinationalSystem<S>, measure: usize, context: usize) -> Result<()> {
    if measure >= system.measure_count() {
        return Err(Error::UnknownMeasure(measure.to_string()));
    }
    if context >= system.entity_count() {
        return Err(Error::UnknownEntity(context.to_string()));
    }
    Ok(())
}

fn pick<S: Scalar>(layers: &[Layer<S>], candidates: &[usize], x: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &l in candidates {
        if let Some(v) = &layers[l].value[x] {
            if best.is_none_or(|b| v.total_cmp(layers[b].value[x].as_ref().unwrap()) == Ordering::Less) {
                best = Some(l);
            }
        }
    }
    best
}

/// Computes the whole table `sigma_j(. | context)`.
pub fn simplicity_table<S: Scalar>(
    system: &CombinationalSystem<S>,
    measure: usize,
    context: usize,
    mode: RelativeMode,
) -> Result<SimplicityTable<S>> {
    check_indices(system, measure, context)?;
    let n = system.entity_count();
    let e = system.identity();
    let spec = system.measure_spec(measure);
    let layers = match mode {
        RelativeMode::FreeContext => {
            // layer 0: derivations not touching the context; layer 1: exactly one use.
            let a = plain_layer(system, measure, context, 0, base_seeds(system, measure));
            let b = settle(n, vec![(context, S::zero(), Via::Context)], |x, done, out| {
                for &ri in system.consumers(x) {
                    let r = &system.reactions()[ri];
                    if !spec.uses(r.op) {
                        continue;
                    }
                    let cost = system
                        .reaction_cost(measure, r.op, r.left, r.right, context)
                        .expect("operator in measure");
                    let bx = done[x].clone().expect("settled");
                    let mut push = |total: S, left: Slot, right: Slot| {
                        for &p in &r.products {
                            out.push((p, total.clone(), Via::Fire { op: r.op, left, right }));
                        }
                    };
                    if r.left == x {
                        if let Some(ar) = &a.value[r.right] {
                            push(bx.clone() + ar.clone() + cost.clone(), (x, 1), (r.right, 0));
                        }
                    }
                    if r.right == x {
                        if let Some(al) = &a.value[r.left] {
                            push(al.clone() + bx.clone() + cost.clone(), (r.left, 0), (x, 1));
                        }
                    }
                }
            });
            vec![a, b]
        }
        RelativeMode::Literal => {
            let base = plain_layer(system, measure, e, 0, base_seeds(system, measure));
            let mut seeds = base_seeds(system, measure);
            if context != e {
                // direct use of the context as an operand, priced unconditionally
                for &ri in system.consumers(context) {
                    let r = &system.reactions()[ri];
                    if !spec.uses(r.op) {
                        continue;
                    }
                    let (Some(l), Some(rc)) = (&base.value[r.left], &base.value[r.right]) else { continue };
                    let cost = system.reaction_cost(measure, r.op, r.left, r.right, e).expect("operator in measure");
                    for &p in &r.products {
                        seeds.push((
                            p,
                            l.clone() + rc.clone() + cost.clone(),
                            Via::Fire { op: r.op, left: (r.left, 0), right: (r.right, 0) },
                        ));
                    }
                }
                // x = w *_i e
                if let (Some(op), Some(sw)) = ((0..system.operator_count()).find(|&o| spec.uses(o)), &base.value[context]) {
                    seeds.push((context, sw.clone(), Via::Fire { op, left: (context, 0), right: (e, 0) }));
                }
            }
            let lit = plain_layer(system, measure, context, 1, seeds);
            vec![base, lit]
        }
    };
    let visible: &[usize] = match mode {
        RelativeMode::FreeContext => &[0, 1],
        RelativeMode::Literal => &[1],
    };
    let result = (0..n).map(|x| pick(&layers, visible, x)).collect();
    Ok(SimplicityTable { measure, context, mode, layers, result })
}

/// `sigma_j(x)`.
pub fn simplicity<S: Scalar>(system: &CombinationalSystem<S>, measure: usize, x: usize) -> Result<ExtCost<S>> {
    if x >= system.entity_count() {
        return Err(Error::UnknownEntity(x.to_string()));
    }
    Ok(simplicity_table(system, measure, system.identity(), RelativeMode::FreeContext)?.value(x))
}

/// `sigma_j(x | w)`.
pub fn relative_simplicity<S: Scalar>(
    system: &CombinationalSystem<S>,
    measure: usize,
    x: usize,
    w: usize,
    mode: RelativeMode,
) -> Result<ExtCost<S>> {
    if x >= system.entity_count() {
        return Err(Error::UnknownEntity(x.to_string()));
    }
    Ok(simplicity_table(system, measure, w, mode)?.value(x))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub fingerprint: String,
    pub measure: usize,
    pub context: usize,
    pub mode: RelativeMode,
}

/// Memo of simplicity tables shared across queries and threads.
pub struct SimplicityCache<S> {
    tables: RwLock<HashMap<CacheKey, Arc<SimplicityTable<S>>>>,
}

impl<S> Default for SimplicityCache<S> {
    fn default() -> Self {
        SimplicityCache { tables: RwLock::new(HashMap::new()) }
    }
}

impl<S: Scalar> SimplicityCache<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn key(system: &CombinationalSystem<S>, measure: usize, context: usize, mode: RelativeMode) -> CacheKey {
        CacheKey { fingerprint: system.fingerprint().to_string(), measure, context, mode }
    }

    pub fn get(&self, key: &CacheKey) -> Option<Arc<SimplicityTable<S>>> {
        self.tables.read().expect("cache lock").get(key).cloned()
    }

    pub fn insert(&self, key: CacheKey, table: SimplicityTable<S>) -> Arc<SimplicityTable<S>> {
        let table = Arc::new(table);
        self.tables.write().expect("cache lock").insert(key, table.clone());
        table
    }

    pub fn table(
        &self,
        system: &CombinationalSystem<S>,
        measure: usize,
        context: usize,
        mode: RelativeMode,
    ) -> Result<Arc<SimplicityTable<S>>> {
        let key = Self::key(system, measure, context, mode);
        if let Some(t) = self.get(&key) {
            return Ok(t);
        }
        let table = simplicity_table(system, measure, context, mode)?;
        Ok(self.insert(key, table))
    }

    pub fn len(&self) -> usize {
        self.tables.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Test hook: overwrite one cached value so that cross-checks must fail.
    #[doc(hidden)]
    pub fn corrupt(&self, key: &CacheKey, x: usize, value: ExtCost<S>) -> bool {
        let mut guard = self.tables.write().expect("cache lock");
        match guard.get_mut(key) {
            Some(t) => {
                Arc::make_mut(t).force_value(x, value);
                true
            }
            None => false,
        }
    }
}
