//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to
//! see the report when everything passes.

mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use cosm_core::dualnet::{Iteration, LmiParams};

use cosm_core::multiset::DEFAULT_EXACT_CAP;
use cosm_core::oracle::{oracle_bundles, oracle_frontier, oracle_table, oracle_transport, DEFAULT_ORACLE_CAP};
use cosm_core::structure::DEFAULT_CHAIN_CAP;
use cosm_core::system::{random_system, RandomParams};
use cosm_core::{
    bundle, bundle_dominates, bundle_table, build_subpattern_graph, coherence_degree, cost_associativity,
    expression_cost, fixed_point_iteration, fixtures, gamma_check, hutchinson_distance, hutchinson_metric,
    lmi_distance, multiset_simplicity, order_diagnostics, random_expression, simplicity_table, subpattern_graph,
    tanimoto_metrics, vector_expression_cost, ChainScan, Denominator, ExtCost, Expression, MetricTable, Multiset,
    PatternEngine, PositionPolicy, QDistribution, Rational, Relation, RelativeMode, Solver, System,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 200;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn corpus(max_measures: usize) -> Vec<System> {
    let p = RandomParams { max_measures, ..RandomParams::default() };
    (0..SEEDS).map(|s| random_system(s, &p).unwrap()).collect()
}

fn oracle_simplicity() -> Verdict {
    let start = Instant::now();
    let (mut checked, mut bad) = (0usize, 0usize);
    for sys in corpus(3) {
        for m in 0..sys.measure_count() {
            let fast = simplicity_table(&sys, m, sys.identity(), RelativeMode::FreeContext).unwrap().values();
            let slow = oracle_table(&sys, m, sys.identity(), RelativeMode::FreeContext, DEFAULT_ORACLE_CAP).unwrap();
            checked += fast.len();
            bad += fast.iter().zip(&slow).filter(|(a, b)| a != b).count();
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(bad == 0 && secs < 60.0, format!("{SEEDS} systems, {checked} values, {bad} mismatches, {secs:.1}s"))
}

fn oracle_bundles_frontiers() -> Verdict {
    let (mut bundles, mut frontiers, mut bad) = (0usize, 0usize, 0usize);
    for sys in corpus(2) {
        let w = sys.identity();
        let fast = bundle_table(&sys, w, 64).unwrap();
        let slow = oracle_bundles(&sys, w, DEFAULT_ORACLE_CAP).unwrap();
        bundles += slow.len();
        bad += fast.bundles().iter().zip(&slow).filter(|(a, b)| a != b).count();
        if sys.measure_count() < 2 {
            continue;
        }
        let engine = PatternEngine::new(&sys, w, RelativeMode::FreeContext, None).unwrap();
        for x in 0..sys.entity_count() {
            for denom in [Denominator::PerMeasure, Denominator::Base] {
                let fast: Vec<_> = engine
                    .frontier(x, denom)
                    .unwrap()
                    .into_iter()
                    .map(|r| (r.y, r.z, r.op, r.coords.into_iter().map(Result::unwrap).collect::<Vec<_>>()))
                    .collect();
                let slow: Vec<_> = oracle_frontier(&sys, x, w, denom, DEFAULT_ORACLE_CAP)
                    .unwrap()
                    .into_iter()
                    .map(|r| (r.y, r.z, r.op, r.coords))
                    .collect();
                frontiers += 1;
                bad += usize::from(fast != slow);
            }
        }
    }
    verdict(bad == 0, format!("{bundles} bundles, {frontiers} frontiers, {bad} mismatches"))
}

fn expressions(sys: &System, count: usize, seed: u64) -> Vec<Expression> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        if let Some(e) = random_expression(sys, &mut rng, 6) {
            out.push(e);
        }
    }
    out
}

fn reduction_bound() -> Verdict {
    let (mut cases, mut bad, mut equal) = (0usize, 0usize, 0usize);
    for (sys, seed) in [(fixtures::toy1(), 11), (fixtures::str1(), 12)] {
        let tables: Vec<_> =
            (0..sys.measure_count()).map(|m| simplicity_table(&sys, m, sys.identity(), RelativeMode::FreeContext).unwrap()).collect();
        for expr in expressions(&sys, 500, seed) {
            let x = expr.evaluate(&sys).unwrap();
            for (m, t) in tables.iter().enumerate() {
                cases += 1;
                if !t.value(x).le(&expression_cost(&sys, m, &expr).unwrap()) {
                    bad += 1;
                }
            }
        }
        let e = Expression::leaf(sys.identity());
        for (m, t) in tables.iter().enumerate() {
            for x in 0..sys.entity_count() {
                let Some(tree) = t.witness_expression(&sys, x).filter(|_| !sys.is_atom(x) && x != sys.identity()) else {
                    continue;
                };
                for variant in [tree.clone(), Expression::node(0, tree.clone(), e.clone()), Expression::node(0, e.clone(), tree)] {
                    if expression_cost(&sys, m, &variant).unwrap() == t.value(x) {
                        equal += 1;
                    }
                }
            }
        }
    }
    verdict(bad == 0 && cases >= 1000 && equal >= 50, format!("{cases} cases, {bad} violations, {equal} equality cases"))
}

fn relative_contexts() -> Verdict {
    let mut bad = 0usize;
    for (_, sys) in fixtures::all() {
        for m in 0..sys.measure_count() {
            let plain = simplicity_table(&sys, m, sys.identity(), RelativeMode::FreeContext).unwrap().values();
            for mode in [RelativeMode::FreeContext, RelativeMode::Literal] {
                bad += usize::from(simplicity_table(&sys, m, sys.identity(), mode).unwrap().values() != plain);
            }
        }
    }
    let sys = fixtures::str1();
    let n = sys.entity_count();
    let mut triples = 0usize;
    for m in 0..sys.measure_count() {
        let rel: Vec<Vec<ExtCost<Rational>>> =
            (0..n).map(|w| simplicity_table(&sys, m, w, RelativeMode::FreeContext).unwrap().values()).collect();
        for y in 0..n {
            for z in 0..n {
                for w in 0..n {
                    triples += 1;
                    if !rel[z][y].le(&(rel[w][y].clone() + rel[z][w].clone())) {
                        bad += 1;
                    }
                }
            }
        }
    }
    verdict(bad == 0, format!("identity contexts on all fixtures, {triples} STR1 triples, {bad} violations"))
}

fn bundle_dominance() -> Verdict {
    let (mut cases, mut bad) = (0usize, 0usize);
    for (sys, seed) in [(fixtures::toy2(), 21), (fixtures::str1(), 22)] {
        for expr in expressions(&sys, 500, seed) {
            let x = expr.evaluate(&sys).unwrap();
            let b = bundle(&sys, x, sys.identity()).unwrap();
            let tree = vector_expression_cost(&sys, &expr).unwrap();
            cases += 1;
            bad += usize::from(!bundle_dominates(&b, &[tree]).unwrap());
        }
    }
    verdict(bad == 0, format!("{cases} expressions, {bad} violations"))
}

fn multisets(support: &[usize]) -> Vec<Multiset> {
    let mut out = vec![Multiset::new()];
    for &x in support {
        out = out
            .into_iter()
            .flat_map(|m| {
                (0..=2u64).map(move |c| {
                    let mut next = m.clone();
                    if c > 0 {
                        next.insert(x, c);
                    }
                    next
                })
            })
            .collect();
    }
    out
}

fn multiset_subadditivity() -> Verdict {
    let (mut pairs, mut bad, mut normalized) = (0usize, 0usize, 0usize);
    for sys in [fixtures::toy1(), fixtures::toy2()] {
        let support: Vec<usize> = (0..sys.entity_count()).filter(|&x| x != sys.identity()).take(5).collect();
        let all = multisets(&support);
        for m in 0..sys.measure_count() {
            let mut memo = std::collections::HashMap::new();
            let mut cost = |s: &Multiset| -> ExtCost<Rational> {
                memo.entry(s.clone())
                    .or_insert_with(|| multiset_simplicity(&sys, m, s, Solver::Exact, DEFAULT_EXACT_CAP).unwrap().value)
                    .clone()
            };
            for s in &all {
                for t in &all {
                    let u = s.union(t);
                    let (j, a, b) = (cost(&u), cost(s), cost(t));
                    pairs += 1;
                    bad += usize::from(!j.le(&(a.clone() + b.clone())));
                    if let (Some(j), Some(a), Some(b)) = (j.finite(), a.finite(), b.finite()) {
                        if s.total() > 0 && t.total() > 0 {
                            let per = |v: &Rational, n: u64| v / Rational::from_integer(n.into());
                            normalized += usize::from(per(j, u.total()) > per(a, s.total()).max(per(b, t.total())));
                        }
                    }
                }
            }
        }
    }
    verdict(bad == 0, format!("{pairs} pairs, {bad} violations; normalized form violations {normalized}"))
}

fn hierarchy() -> Verdict {
    let sc = fixtures::string_concat();
    let g = subpattern_graph(&sc, sc.identity(), PositionPolicy::LeftOnly).unwrap();
    let d = order_diagnostics(&g, ChainScan::default()).unwrap();
    let a = cost_associativity(&sc, &[0, 1]).unwrap();
    let exact = a.defect.is_zero() && d.antisymmetry_violations.is_empty() && d.transitivity_defect.is_zero();

    let pc = fixtures::perturbed_concat();
    let c = cost_associativity(&pc, &[0, 1]).unwrap().defect;
    let g = subpattern_graph(&pc, pc.identity(), PositionPolicy::LeftOnly).unwrap();
    let c_obs = order_diagnostics(&g, ChainScan::default()).unwrap().transitivity_defect;
    let bounded = c_obs.le(&(c.clone() + c.clone()));

    let gs = fixtures::gamma_system();
    let r = gamma_check(&gs, DEFAULT_CHAIN_CAP).unwrap();
    let gamma = r.law_holds_everywhere() && r.conclusion_holds;
    verdict(
        exact && bounded && gamma,
        format!(
            "(a) defect {} chains {} t-defect {}; (b) c {} c_obs {}; (c) law {}/{} bound {} c_obs {}",
            a.defect, d.chains, d.transitivity_defect, c, c_obs, r.law_holds, r.triples.len(), r.c,
            r.diagnostics.transitivity_defect
        ),
    )
}

fn metric_properties() -> Verdict {
    let mut tables = 0usize;
    let mut bad = 0usize;
    for (_, sys) in fixtures::all() {
        if sys.measure_count() < 2 {
            continue;
        }
        let engine = PatternEngine::new(&sys, sys.identity(), RelativeMode::FreeContext, None).unwrap();
        let g = build_subpattern_graph(&engine, PositionPolicy::LeftOnly, Relation::Subpattern).unwrap();
        let m = tanimoto_metrics(&g, &q(1, 2)).unwrap();
        let lmi = lmi_distance(&engine, &m.intensional, &m.extensional, &LmiParams::default()).unwrap();
        let transport = hutchinson_metric(&g, &m.composite).unwrap();
        for t in [&m.intensional, &m.extensional, &m.composite, &lmi, &transport] {
            tables += 1;
            bad += usize::from(!t.violations().is_empty());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 6;
    let mut transport_bad = 0usize;
    let trials = 500;
    for _ in 0..trials {
        let raw: Vec<i64> = (0..n * n).map(|_| rng.gen_range(0..9)).collect();
        let ground = MetricTable::from_fn("ground", n, |x, y| q(raw[x.min(y) * n + x.max(y)], 4));
        let mut dist = |x: usize| {
            let k = rng.gen_range(1..=4);
            let mut ys: Vec<usize> = (0..n).collect();
            for i in 0..k {
                let j = rng.gen_range(i..n);
                ys.swap(i, j);
            }
            let mut ys = ys[..k].to_vec();
            ys.sort_unstable();
            let ms: Vec<i64> = ys.iter().map(|_| rng.gen_range(1..6)).collect();
            let total: i64 = ms.iter().sum();
            QDistribution { x, support: ys.into_iter().zip(ms).map(|(y, m)| (y, q(m, total))).collect(), degenerate: false }
        };
        let (p, pq) = (dist(0), dist(1));
        let cost: Vec<Vec<Rational>> =
            p.support.iter().map(|(y, _)| pq.support.iter().map(|(z, _)| ground.get(*y, *z).clone()).collect()).collect();
        let masses = |d: &QDistribution<Rational>| d.support.iter().map(|s| s.1.clone()).collect::<Vec<_>>();
        let slow = oracle_transport(&masses(&p), &masses(&pq), &cost).unwrap();
        transport_bad += usize::from(hutchinson_distance(&p, &pq, &ground).unwrap() != slow);
    }
    verdict(
        bad == 0 && transport_bad == 0,
        format!("{tables} fixture tables, {bad} with violations; transport {trials} trials, {transport_bad} mismatches"),
    )
}

fn coherence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut out_of_range = 0usize;
    let mut self_not_one = 0usize;
    for _ in 0..1000 {
        let n = rng.gen_range(2..7);
        let mut table = || {
            let raw: Vec<i64> = (0..n * n).map(|_| rng.gen_range(0..=12)).collect();
            MetricTable::from_fn("random", n, |x, y| q(raw[x.min(y) * n + x.max(y)], 12))
        };
        let (a, b) = (table(), table());
        let d = coherence_degree(&a, &b, None).unwrap();
        out_of_range += usize::from(d < q(0, 1) || d > q(1, 1));
        self_not_one += usize::from(coherence_degree(&a, &a, None).unwrap() != q(1, 1));
    }
    let h = q(1, 2);
    let z = q(0, 1);
    let a = MetricTable::from_rows("a", vec![vec![z.clone(), h.clone(), h.clone()], vec![h.clone(), z.clone(), h.clone()], vec![h.clone(), h.clone(), z.clone()]]).unwrap();
    let b = MetricTable::from_rows("b", vec![vec![z.clone(), z.clone(), h.clone()], vec![h.clone(), z.clone(), h.clone()], vec![h.clone(), h.clone(), z.clone()]]).unwrap();
    let hand = coherence_degree(&a, &b, None).unwrap();

    let sys = fixtures::single_reaction();
    let engine = PatternEngine::new(&sys, sys.identity(), RelativeMode::FreeContext, None).unwrap();
    let g = build_subpattern_graph(&engine, PositionPolicy::LeftOnly, Relation::Subpattern).unwrap();
    let m = tanimoto_metrics(&g, &q(1, 2)).unwrap();
    let r = fixed_point_iteration(&engine, &m.intensional, &m.extensional, &LmiParams::default(), &Iteration::new(10, q(0, 1))).unwrap();
    let fixed = r.converged && r.iterations <= 2 && r.degree == q(1, 1);
    verdict(
        out_of_range == 0 && self_not_one == 0 && hand == q(5, 6) && fixed,
        format!(
            "1000 pairs, {out_of_range} out of range, {self_not_one} self-degree != 1; hand fixture {hand}; fixed point in {} steps, degree {}",
            r.iterations, r.degree
        ),
    )
}

fn determinism() -> Verdict {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut cases = 0usize;
    let mut bad = Vec::new();
    for (name, args) in common::cases() {
        cases += 1;
        let want = fs::read_to_string(golden.join(name)).unwrap_or_default();
        for threads in ["1", "1", "1", "8", "8", "8"] {
            let mut full = vec!["--threads", threads];
            full.extend(args.iter().map(String::as_str));
            let out = common::run(&full);
            if !out.status.success() || out.stdout != want.as_bytes() {
                bad.push(format!("{name}@{threads}"));
                break;
            }
        }
    }
    verdict(bad.is_empty(), format!("{cases} golden commands x 3 runs x threads 1/8; drifted: {bad:?}"))
}

#[test]
fn acceptance_report() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("oracle-equivalence-simplicity", oracle_simplicity),
        ("oracle-equivalence-bundles-frontiers", oracle_bundles_frontiers),
        ("reduction-bounds-tree-cost", reduction_bound),
        ("relative-simplicity-context", relative_contexts),
        ("bundle-dominates-tree-vectors", bundle_dominance),
        ("multiset-subadditivity", multiset_subadditivity),
        ("hierarchy-a-b-c", hierarchy),
        ("metric-properties", metric_properties),
        ("coherence", coherence),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let v = check();
        println!("{} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
