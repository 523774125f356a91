use std::fs;
use std::path::Path;

use cosm_core::dualnet::LmiParams;
use cosm_core::oracle::{oracle_bundles, oracle_frontier, oracle_table};
use cosm_core::structure::{ChainScan, DEFAULT_CHAIN_CAP};
use cosm_core::system::{BuiltinFamily, GenerateParams};
use cosm_core::{
    bundle_table, build_subpattern_graph, cost_associativity, expression_cost, fixed_point_iteration, gamma_check,
    generate_builtin, hutchinson_metric, Iteration, load_system_file, multiset_simplicity, order_diagnostics, simplicity_table,
    tanimoto_metrics, validate_filtration, Denominator, Expression, Multiset, PatternEngine, Polarity, PositionPolicy,
    Rational, Relation, RelativeMode, Solver, SubpatternGraph, System,
};
use serde_json::{json, Value};

use crate::args::*;
use crate::cache::FileCache;
use crate::render::*;
use crate::CliError;

pub struct Ctx {
    pub cache: FileCache,
}

fn load(arg: &SystemArg) -> Result<System, CliError> {
    Ok(load_system_file(&arg.system)?)
}

fn context(system: &System, name: &Option<String>) -> Result<usize, CliError> {
    match name {
        Some(n) => Ok(system.entity(n)?),
        None => Ok(system.identity()),
    }
}

fn mode(m: Mode) -> RelativeMode {
    match m {
        Mode::Free => RelativeMode::FreeContext,
        Mode::Literal => RelativeMode::Literal,
    }
}

fn denominator(d: DenominatorArg) -> Denominator {
    match d {
        DenominatorArg::PerMeasure => Denominator::PerMeasure,
        DenominatorArg::Base => Denominator::Base,
    }
}

fn unsupported(format: Format, allowed: &[Format]) -> Result<(), CliError> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("output format {format:?} is not available for this command").to_lowercase()))
    }
}

pub fn validate(args: &ValidateArgs) -> Result<String, CliError> {
    let sys = load(&args.system)?;
    let filtration = if sys.roles().filtration.is_empty() {
        Value::Null
    } else {
        serde_json::to_value(validate_filtration(&sys)?).expect("report serializes")
    };
    Ok(pretty(&json!({
        "valid": true,
        "fingerprint": sys.fingerprint(),
        "entities": sys.entity_count(),
        "atoms": sys.atoms().count(),
        "operators": sys.operator_count(),
        "reactions": sys.reactions().len(),
        "measures": sys.measures().iter().map(|m| m.id.clone()).collect::<Vec<_>>(),
        "filtration": filtration,
    })))
}

pub fn simplicity(ctx: &Ctx, args: &SimplicityArgs) -> Result<String, CliError> {
    let sys = load(&args.system)?;
    let m = sys.measure(&args.measure)?;
    let w = context(&sys, &args.context)?;
    let mode = mode(args.mode);
    let header = json!({
        "measure": sys.measure_spec(m).id,
        "context": sys.name(w),
        "mode": mode.name(),
    });
    let mut out = header.as_object().cloned().expect("object");
    if let Some(text) = &args.expr {
        let expr = Expression::parse(&sys, text)?;
        let reduced = expr.evaluate(&sys)?;
        out.insert("expression".into(), json!(expr.display(&sys).to_string()));
        out.insert("value".into(), cost(&expression_cost(&sys, m, &expr)?));
        out.insert("reduced".into(), json!(sys.name(reduced)));
        out.insert("reducedValue".into(), cost(&ctx.cache.table(&sys, m, sys.identity(), RelativeMode::FreeContext)?.value(reduced)));
    } else if args.all {
        let t = ctx.cache.table(&sys, m, w, mode)?;
        let rows: Vec<Value> = (0..sys.entity_count()).map(|x| json!({"entity": sys.name(x), "value": cost(&t.value(x))})).collect();
        out.insert("values".into(), Value::Array(rows));
    } else {
        let x = sys.entity(args.entity.as_deref().expect("clap group"))?;
        // derivations need a freshly computed table
        let t = simplicity_table(&sys, m, w, mode)?;
        out.insert("entity".into(), json!(sys.name(x)));
        out.insert("value".into(), cost(&t.value(x)));
        out.insert("witnessDerivation".into(), serde_json::to_value(t.derivation(&sys, x)).expect("steps serialize"));
    }
    Ok(pretty(&Value::Object(out)))
}

pub fn multiset(args: &MultisetArgs) -> Result<String, CliError> {
    let sys = load(&args.system)?;
    let m = sys.measure(&args.measure)?;
    let targets = Multiset::parse(&sys, &args.elements)?;
    let solver = match args.solver {
        SolverArg::Exact => Solver::Exact,
        SolverArg::Greedy => Solver::Greedy,
    };
    let r = multiset_simplicity(&sys, m, &targets, solver, args.cap)?;
    let plan: Vec<Value> = r
        .plan
        .iter()
        .map(|&i| {
            let rx = &sys.reactions()[i];
            json!({"op": sys.op_name(rx.op), "left": sys.name(rx.left), "right": sys.name(rx.right), "products": names(&sys, rx.products.iter().copied())})
        })
        .collect();
    Ok(pretty(&json!({
        "elements": targets.entries().map(|(x, c)| json!({"entity": sys.name(x), "count": c})).collect::<Vec<_>>(),
        "measure": sys.measure_spec(m).id,
        "solver": solver.to_string(),
        "value": cost(&r.value),
        "normalized": cost(&r.normalized),
        "totalMultiplicity": r.total_multiplicity,
        "approximate": r.approximate,
        "plan": plan,
    })))
}

pub fn bundle(args: &BundleArgs) -> Result<String, CliError> {
    unsupported(args.output, &[Format::Json, Format::Csv])?;
    let sys = load(&args.system)?;
    let x = sys.entity(&args.entity)?;
    let w = context(&sys, &args.context)?;
    let table = bundle_table(&sys, w, args.cap)?;
    let b = table.bundle(x);
    if args.output == Format::Csv {
        let mut out = csv_row(sys.measures().iter().map(|m| m.id.clone()));
        for v in b {
            out += &csv_row(v.to_strings());
        }
        return Ok(out);
    }
    Ok(pretty(&json!({
        "entity": sys.name(x),
        "context": sys.name(w),
        "measures": sys.measures().iter().map(|m| m.id.clone()).collect::<Vec<_>>(),
        "bundle": b.iter().map(vector).collect::<Vec<_>>(),
    })))
}

fn engine<'a>(ctx: &Ctx, sys: &'a System, w: usize) -> Result<PatternEngine<'a, Rational>, CliError> {
    Ok(PatternEngine::from_tables(sys, w, ctx.cache.tables(sys, w, RelativeMode::FreeContext)?))
}

pub fn pattern(ctx: &Ctx, args: &PatternArgs) -> Result<String, CliError> {
    unsupported(args.output, &[Format::Json, Format::Csv])?;
    let sys = load(&args.system)?;
    let x = sys.entity(&args.target)?;
    let w = context(&sys, &args.context)?;
    let denom = denominator(args.denominator);
    if sys.measure_count() < 2 {
        return Err(cosm_core::Error::Parameter("pattern vectors need at least two measures".into()).into());
    }
    let engine = engine(ctx, &sys, w)?;
    let records = if args.frontier { engine.frontier(x, denom)? } else { engine.records(x, denom)? };
    let ext_ids: Vec<String> = sys.measures()[1..].iter().map(|m| m.id.clone()).collect();
    let coord = |c: &Result<cosm_core::Intensity<Rational>, String>| match c {
        Ok(i) => intensity(i),
        Err(_) => Value::Null,
    };
    let gm = |r: &cosm_core::PatternRecord<Rational>| match &r.classification {
        cosm_core::Classification::Full(g) => Some(g.to_string()),
        _ => None,
    };
    if args.output == Format::Csv {
        let head = ["left", "op", "right"].map(String::from).into_iter().chain(ext_ids.clone()).chain(["classification".into(), "geometric_mean".into()]);
        let mut out = csv_row(head);
        for r in &records {
            let fields = [sys.name(r.y), sys.op_name(r.op), sys.name(r.z)]
                .map(String::from)
                .into_iter()
                .chain(r.coords.iter().map(|c| c.as_ref().map(|i| i.to_exact_string()).unwrap_or_else(|_| "undefined".into())))
                .chain([r.classification.tag().to_string(), gm(r).unwrap_or_default()]);
            out += &csv_row(fields);
        }
        return Ok(out);
    }
    let rows: Vec<Value> = records
        .iter()
        .map(|r| {
            json!({
                "left": sys.name(r.y),
                "op": sys.op_name(r.op),
                "right": sys.name(r.z),
                "coords": r.coords.iter().map(coord).collect::<Vec<_>>(),
                "undefined": r.coords.iter().filter_map(|c| c.as_ref().err().cloned()).collect::<Vec<_>>(),
                "classification": r.classification.tag(),
                "geometricMean": gm(r),
            })
        })
        .collect();
    Ok(pretty(&json!({
        "target": sys.name(x),
        "context": sys.name(w),
        "denominator": match denom { Denominator::Base => "base", Denominator::PerMeasure => "per-measure" },
        "frontier": args.frontier,
        "measures": ext_ids,
        "records": rows,
    })))
}

fn graph(ctx: &Ctx, sys: &System, g: &GraphArgs) -> Result<SubpatternGraph<Rational>, CliError> {
    let w = context(sys, &g.context)?;
    let policy = match g.positions {
        Positions::Left => PositionPolicy::LeftOnly,
        Positions::Both => PositionPolicy::Both,
    };
    let relation = match g.relation {
        RelationArg::Subpattern => Relation::Subpattern,
        RelationArg::Submultipattern => Relation::Submultipattern(denominator(g.denominator)),
    };
    Ok(build_subpattern_graph(&engine(ctx, sys, w)?, policy, relation)?)
}

fn error_json(e: &cosm_core::Error) -> Value {
    json!({"error": {"code": e.code(), "message": e.to_string()}})
}

fn chain(sys: &System, c: Option<(usize, usize, usize)>) -> Value {
    c.map(|(x, y, z)| names(sys, [x, y, z])).unwrap_or(Value::Null)
}

pub fn hierarchy(ctx: &Ctx, args: &HierarchyArgs) -> Result<String, CliError> {
    unsupported(args.output, &[Format::Json, Format::Dot])?;
    let sys = load(&args.system)?;
    let scan = match (args.chain_samples, args.seed) {
        (Some(samples), Some(seed)) => ChainScan::Sampled { samples, seed },
        _ => ChainScan::Exhaustive { cap: DEFAULT_CHAIN_CAP },
    };
    let g = graph(ctx, &sys, &args.graph)?;
    if args.output == Format::Dot {
        return Ok(g.to_dot(&sys));
    }
    let edges: Vec<Value> = g
        .edges()
        .into_iter()
        .map(|(x, y)| {
            let s = g.score(x, y).expect("edge has a score");
            json!({
                "from": sys.name(x),
                "to": sys.name(y),
                "q": intensity(&s.q),
                "partner": sys.name(s.witness.z),
                "op": sys.op_name(s.witness.op),
                "side": if s.witness.x_left { "left" } else { "right" },
            })
        })
        .collect();
    let reduction: Vec<Value> = g.transitive_reduction().into_iter().map(|(x, y)| names(&sys, [x, y])).collect();
    let mut out = json!({
        "context": sys.name(g.context),
        "positions": match g.policy { PositionPolicy::LeftOnly => "left", PositionPolicy::Both => "both" },
        "edges": edges,
        "reduction": reduction,
    });
    if args.diagnose {
        let d = order_diagnostics(&g, scan)?;
        let order = json!({
            "antisymmetryViolations": d.antisymmetry_violations.iter().map(|&(x, y)| names(&sys, [x, y])).collect::<Vec<_>>(),
            "transitivityDefect": cost(&d.transitivity_defect),
            "worstChain": chain(&sys, d.worst_chain),
            "chains": d.chains,
            "exhaustive": d.exhaustive,
            "note": d.reflexive_note,
        });
        let measures: Vec<usize> = (0..sys.measure_count()).collect();
        let assoc = match cost_associativity(&sys, &measures) {
            Ok(r) => json!({"associative": r.is_associative, "defect": cost(&r.defect), "triples": r.triples.len()}),
            Err(e) => error_json(&e),
        };
        let gamma = if sys.roles().gamma.is_some() {
            match gamma_check(&sys, DEFAULT_CHAIN_CAP) {
                Ok(r) => json!({
                    "c": cost(&r.c),
                    "triples": r.triples.len(),
                    "lawHolds": r.law_holds,
                    "premiseHolds": r.premise_holds,
                    "premiseBalancedHolds": r.premise_balanced_holds,
                    "transitivityDefect": cost(&r.diagnostics.transitivity_defect),
                    "conclusionHolds": r.conclusion_holds,
                }),
                Err(e) => error_json(&e),
            }
        } else {
            Value::Null
        };
        out["diagnostics"] = json!({"order": order, "costAssociativity": assoc, "gamma": gamma});
    }
    Ok(pretty(&out))
}

pub fn metrics(ctx: &Ctx, args: &MetricsArgs) -> Result<String, CliError> {
    unsupported(args.output, &[Format::Json, Format::Csv])?;
    let sys = load(&args.system)?;
    let g = graph(ctx, &sys, &args.graph)?;
    let t = tanimoto_metrics(&g, &args.alpha)?;
    match args.construction {
        Construction::Tanimoto => {
            if args.output == Format::Csv {
                let pick = match args.table {
                    TableArg::Intensional => &t.intensional,
                    TableArg::Extensional => &t.extensional,
                    TableArg::Composite => &t.composite,
                };
                return Ok(table_csv(&sys, pick));
            }
            Ok(pretty(&json!({
                "construction": "tanimoto",
                "alpha": scalar(&args.alpha),
                "intensional": table_json(&sys, &t.intensional),
                "extensional": table_json(&sys, &t.extensional),
                "composite": table_json(&sys, &t.composite),
            })))
        }
        Construction::Hutchinson => {
            let h = hutchinson_metric(&g, &t.composite)?;
            if args.output == Format::Csv {
                return Ok(table_csv(&sys, &h));
            }
            let dists: Vec<Value> = (0..sys.entity_count())
                .map(|x| {
                    let q = cosm_core::q_distribution(&g, x);
                    json!({
                        "entity": sys.name(x),
                        "degenerate": q.degenerate,
                        "support": q.support.iter().map(|(y, p)| json!([sys.name(*y), scalar(p)])).collect::<Vec<_>>(),
                    })
                })
                .collect();
            Ok(pretty(&json!({
                "construction": "hutchinson",
                "alpha": scalar(&args.alpha),
                "distributions": dists,
                "transport": table_json(&sys, &h),
            })))
        }
    }
}

pub fn coherence(ctx: &Ctx, args: &CoherenceArgs) -> Result<String, CliError> {
    unsupported(args.output, &[Format::Json])?;
    let sys = load(&args.system)?;
    let g = graph(ctx, &sys, &args.graph)?;
    let t = tanimoto_metrics(&g, &args.alpha)?;
    let engine = engine(ctx, &sys, g.context)?;
    let params = LmiParams {
        k: args.k.clone(),
        alpha: args.alpha.clone(),
        denominator: denominator(args.graph.denominator),
        polarity: match args.polarity {
            PolarityArg::Similarity => Polarity::Similarity,
            PolarityArg::Distance => Polarity::Distance,
        },
    };
    let steps = args.iterate.unwrap_or(1);
    if steps == 0 {
        return Err(CliError::Usage("--iterate must be at least 1".into()));
    }
    let control = Iteration { max_iter: steps, tolerance: args.tol.clone(), snap: args.round_to.clone() };
    let r = fixed_point_iteration(&engine, &t.intensional, &t.extensional, &params, &control)?;
    Ok(pretty(&json!({
        "k": scalar(&args.k),
        "alpha": scalar(&args.alpha),
        "degree": scalar(&r.degree),
        "trajectory": r.trajectory.iter().map(scalar).collect::<Vec<_>>(),
        "iterations": r.iterations,
        "converged": r.converged,
        "roundTo": args.round_to.as_ref().map(scalar),
        "residuals": table_json(&sys, &r.residuals),
        "lmi": table_json(&sys, &r.final_lmi),
    })))
}

pub struct OracleOutcome {
    pub report: String,
    pub mismatches: usize,
}

pub fn oracle_check(ctx: &Ctx, args: &OracleArgs) -> Result<OracleOutcome, CliError> {
    let sys = load(&args.system)?;
    let entities: Vec<usize> = match &args.entity {
        Some(name) => vec![sys.entity(name)?],
        None => (0..sys.entity_count()).collect(),
    };
    let contexts: Vec<usize> = match args.contexts {
        ContextScope::Identity => vec![sys.identity()],
        ContextScope::All => (0..sys.entity_count()).collect(),
    };
    let mut checked = 0usize;
    let mut details = Vec::new();
    for &w in &contexts {
        for m in 0..sys.measure_count() {
            for mode in [RelativeMode::FreeContext, RelativeMode::Literal] {
                let fast = ctx.cache.table(&sys, m, w, mode)?;
                let slow = oracle_table(&sys, m, w, mode, args.cap)?;
                for &x in &entities {
                    checked += 1;
                    if fast.value(x) != slow[x] {
                        let trace = simplicity_table(&sys, m, w, mode)?.derivation(&sys, x);
                        details.push(json!({
                            "kind": "simplicity",
                            "entity": sys.name(x),
                            "measure": sys.measure_spec(m).id,
                            "context": sys.name(w),
                            "mode": mode.name(),
                            "engine": cost(&fast.value(x)),
                            "oracle": cost(&slow[x]),
                            "trace": serde_json::to_value(trace).expect("steps serialize"),
                        }));
                    }
                }
            }
        }
        let fast = bundle_table(&sys, w, cosm_core::cosmos::DEFAULT_LABEL_CAP)?;
        let slow = oracle_bundles(&sys, w, args.cap)?;
        for &x in &entities {
            checked += 1;
            if fast.bundle(x) != &slow[x] {
                details.push(json!({
                    "kind": "bundle",
                    "entity": sys.name(x),
                    "context": sys.name(w),
                    "engine": fast.bundle(x).iter().map(vector).collect::<Vec<_>>(),
                    "oracle": slow[x].iter().map(vector).collect::<Vec<_>>(),
                }));
            }
        }
        if sys.measure_count() >= 2 {
            let engine = engine(ctx, &sys, w)?;
            for denom in [Denominator::PerMeasure, Denominator::Base] {
                for &x in &entities {
                    checked += 1;
                    let fast: Vec<(usize, usize, usize, Vec<Value>)> = engine
                        .frontier(x, denom)?
                        .iter()
                        .map(|r| (r.y, r.z, r.op, r.coords.iter().map(|c| c.as_ref().map(intensity).unwrap_or(Value::Null)).collect()))
                        .collect();
                    let slow: Vec<(usize, usize, usize, Vec<Value>)> = oracle_frontier(&sys, x, w, denom, args.cap)?
                        .iter()
                        .map(|r| (r.y, r.z, r.op, r.coords.iter().map(intensity).collect()))
                        .collect();
                    if fast != slow {
                        let show = |rs: &[(usize, usize, usize, Vec<Value>)]| {
                            rs.iter()
                                .map(|(y, z, op, c)| json!({"left": sys.name(*y), "op": sys.op_name(*op), "right": sys.name(*z), "coords": c}))
                                .collect::<Vec<_>>()
                        };
                        details.push(json!({
                            "kind": "frontier",
                            "entity": sys.name(x),
                            "context": sys.name(w),
                            "denominator": match denom { Denominator::Base => "base", Denominator::PerMeasure => "per-measure" },
                            "engine": show(&fast),
                            "oracle": show(&slow),
                        }));
                    }
                }
            }
        }
    }
    let mismatches = details.len();
    let report = pretty(&json!({
        "checked": checked,
        "mismatches": mismatches,
        "entities": names(&sys, entities.iter().copied()),
        "contexts": names(&sys, contexts.iter().copied()),
        "details": details,
    }));
    Ok(OracleOutcome { report, mismatches })
}

fn family(f: Family) -> BuiltinFamily {
    match f {
        Family::StringConcat => BuiltinFamily::StringConcat,
        Family::PerturbedConcat => BuiltinFamily::PerturbedConcat,
        Family::GammaSystem => BuiltinFamily::GammaSystem,
        Family::Toy1 => BuiltinFamily::Toy1,
        Family::Toy2 => BuiltinFamily::Toy2,
        Family::Str1 => BuiltinFamily::Str1,
        Family::Filtration => BuiltinFamily::Filtration,
        Family::SingleReaction => BuiltinFamily::SingleReaction,
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| cosm_core::Error::Io { path: path.display().to_string(), message: e.to_string() }.into())
}

pub fn generate(args: &GenerateArgs) -> Result<String, CliError> {
    if let Some(dir) = &args.fixtures {
        fs::create_dir_all(dir).map_err(|e| cosm_core::Error::Io { path: dir.display().to_string(), message: e.to_string() })?;
        let mut written = Vec::new();
        for (stem, sys) in cosm_core::fixtures::all() {
            let path = dir.join(format!("{stem}.json"));
            write(&path, &sys.to_pretty_json())?;
            written.push(json!({"fixture": stem, "fingerprint": sys.fingerprint()}));
        }
        return Ok(pretty(&json!({ "written": written })));
    }
    let mut p = GenerateParams::<Rational>::default();
    if let Some(a) = &args.alphabet {
        p.alphabet = a.chars().collect();
    }
    if let Some(n) = args.max_len {
        p.max_len = n;
    }
    if let Some(a) = &args.amplitude {
        p.amplitude = a.clone();
    }
    if let Some(s) = args.seed {
        p.seed = s;
    }
    if let Some(d) = args.depth {
        p.depth = d;
    }
    let sys = generate_builtin(family(args.family.expect("clap group")), &p)?;
    let text = sys.to_pretty_json();
    match &args.out {
        Some(path) => {
            write(path, &text)?;
            Ok(pretty(&json!({"written": path.display().to_string(), "fingerprint": sys.fingerprint()})))
        }
        None => Ok(text),
    }
}
