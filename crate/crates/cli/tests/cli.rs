mod common;

use std::fs;

use common::{fixture, fixtures, json, run, run_with};
use serde_json::Value;

fn error_json(out: &std::process::Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("not json: {text}"))
}

#[test]
fn toy1_ab_costs_three() {
    let v = json(&run(&["simplicity", "--system", &fixture("toy1"), "--measure", "m1", "--entity", "ab"]));
    assert_eq!(v["value"], "3");
    assert_eq!(v["witnessDerivation"].as_array().unwrap().len(), 1);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn malformed_flags_exit_two_before_loading() {
    for args in [
        vec!["metrics", "--system", "/nonexistent.json", "--alpha", "3/2"],
        vec!["coherence", "--system", "/nonexistent.json", "--k", "0"],
        vec!["coherence", "--system", "/nonexistent.json", "--tol", "x"],
        vec!["hierarchy", "--system", "/nonexistent.json", "--chain-samples", "10"],
        vec!["simplicity", "--system", "/nonexistent.json"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn domain_errors_exit_one_with_structured_json() {
    let out = run(&["validate", "--system", "/nonexistent.json"]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_json(&out);
    assert_eq!(e["code"], "io");
    assert_eq!(e["path"], "/nonexistent.json");

    let out = run(&["simplicity", "--system", &fixture("toy1"), "--entity", "zzz"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["code"], "unknown-entity");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(fixture("toy1")).unwrap()).unwrap();
    doc["measures"][0]["op_costs"]["cat"] = Value::String("-1".into());
    fs::write(&bad, doc.to_string()).unwrap();
    let out = run(&["validate", "--system", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_json(&out);
    assert_eq!(e["code"], "negative-cost");
    assert!(!e["path"].as_str().unwrap().is_empty());
}

#[test]
fn wrong_output_format_is_a_usage_error() {
    let out = run(&["coherence", "--system", &fixture("str1"), "--output", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_check_full_scope_is_clean() {
    for name in ["toy1", "toy2", "single-reaction"] {
        let v = json(&run(&["oracle-check", "--system", &fixture(name), "--all", "--contexts", "all"]));
        assert_eq!(v["mismatches"], 0, "{name}");
        assert!(v["checked"].as_u64().unwrap() > 0);
    }
}

#[test]
fn oracle_check_entity_scope_covers_only_that_entity() {
    let v = json(&run(&["oracle-check", "--system", &fixture("toy1"), "--entity", "aba"]));
    assert_eq!(v["entities"], serde_json::json!(["aba"]));
    // one measure: two modes plus one bundle
    assert_eq!(v["checked"], 3);
}

#[test]
fn corrupted_cache_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let sys = fixture("toy1");
    let first = run_with(&["oracle-check", "--system", &sys, "--all"], Some(dir.path()));
    assert!(first.status.success());
    let file = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().ends_with(".0.0.free.json"))
        .expect("cache file written");
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    let last = doc["values"].as_array().unwrap().len() - 1;
    doc["values"][last] = Value::String("1/7".into());
    fs::write(&file, doc.to_string()).unwrap();

    let out = run_with(&["oracle-check", "--system", &sys, "--all"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["mismatches"], 1);
    assert_eq!(report["details"][0]["engine"], "1/7");
    assert!(!report["details"][0]["trace"].as_array().unwrap().is_empty());
    assert_eq!(error_json(&out)["code"], "oracle-mismatch");

    let bypass = run_with(&["--no-cache", "oracle-check", "--system", &sys, "--all"], Some(dir.path()));
    assert!(bypass.status.success());
}

#[test]
fn unreadable_cache_files_are_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let sys = fixture("toy1");
    assert!(run_with(&["simplicity", "--system", &sys, "--all"], Some(dir.path())).status.success());
    for e in fs::read_dir(dir.path()).unwrap() {
        fs::write(e.unwrap().path(), "not json").unwrap();
    }
    let out = run_with(&["oracle-check", "--system", &sys, "--all"], Some(dir.path()));
    assert!(out.status.success());
}

#[test]
fn generate_reproduces_shipped_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    json(&run(&["generate", "--fixtures", dir.path().to_str().unwrap()]));
    let mut count = 0;
    for e in fs::read_dir(fixtures()).unwrap() {
        let p = e.unwrap().path();
        let fresh = fs::read(dir.path().join(p.file_name().unwrap())).unwrap();
        assert_eq!(fresh, fs::read(&p).unwrap(), "{}", p.display());
        count += 1;
    }
    assert_eq!(count, fs::read_dir(dir.path()).unwrap().count());
}

#[test]
fn bundle_and_frontier_values() {
    let v = json(&run(&["bundle", "--system", &fixture("toy2"), "--entity", "aaaa"]));
    assert_eq!(v["bundle"], serde_json::json!([["7", "10"], ["9", "9"]]));
    let v = json(&run(&["pattern", "--system", &fixture("str1"), "--target", "aaaa", "--frontier", "--denominator", "base"]));
    assert_eq!(v["records"][0]["coords"], serde_json::json!(["1/14"]));
}

#[test]
fn no_floats_in_machine_output() {
    let v = json(&run(&["coherence", "--system", &fixture("str1"), "--iterate", "2", "--round-to", "1/100"]));
    fn walk(v: &Value) {
        match v {
            Value::Number(n) => assert!(n.is_u64() || n.is_i64(), "float {n}"),
            Value::String(s) => assert!(s.parse::<f64>().is_err() || !s.contains('.'), "decimal {s}"),
            Value::Array(a) => a.iter().for_each(walk),
            Value::Object(o) => o.values().for_each(walk),
            _ => {}
        }
    }
    walk(&v);
}
