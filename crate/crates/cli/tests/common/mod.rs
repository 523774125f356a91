#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn fixture(name: &str) -> String {
    fixtures().join(format!("{name}.json")).display().to_string()
}

/// Runs the binary with the cache disabled unless `cache` is given.
pub fn run_with(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cosm"));
    cmd.args(args);
    match cache {
        Some(dir) => cmd.env("COSM_CACHE_DIR", dir),
        None => cmd.env_remove("COSM_CACHE_DIR"),
    };
    cmd.output().expect("binary runs")
}

pub fn run(args: &[&str]) -> Output {
    run_with(args, None)
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

pub fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

/// Every golden command: (file name, argv).
pub fn cases() -> Vec<(&'static str, Vec<String>)> {
    let f = |n: &str| fixture(n);
    let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        ("validate_filtration", s(&["validate", "--system", &f("filtration")])),
        ("simplicity_toy1_ab", s(&["simplicity", "--system", &f("toy1"), "--measure", "m1", "--entity", "ab"])),
        ("simplicity_toy1_literal_a", s(&["simplicity", "--system", &f("toy1"), "--all", "--context", "a", "--mode", "literal"])),
        ("simplicity_str1_expr", s(&["simplicity", "--system", &f("str1"), "--expr", "cat(a,cat(a,a))"])),
        ("multiset_toy1", s(&["multiset", "--system", &f("toy1"), "--elements", "ab:1,aba:1", "--solver", "exact"])),
        ("bundle_toy2_aaaa", s(&["bundle", "--system", &f("toy2"), "--entity", "aaaa"])),
        ("pattern_str1_frontier", s(&["pattern", "--system", &f("str1"), "--target", "aaaa", "--frontier"])),
        ("pattern_str1_base_csv", s(&["pattern", "--system", &f("str1"), "--target", "aaaa", "--denominator", "base", "--output", "csv"])),
        ("hierarchy_str1_diagnose", s(&["hierarchy", "--system", &f("str1"), "--diagnose"])),
        ("hierarchy_str1_dot", s(&["hierarchy", "--system", &f("str1"), "--output", "dot"])),
        ("hierarchy_gamma_diagnose", s(&["hierarchy", "--system", &f("gamma-system"), "--diagnose"])),
        ("metrics_str1", s(&["metrics", "--system", &f("str1"), "--alpha", "1/2"])),
        ("metrics_str1_hutchinson_csv", s(&["metrics", "--system", &f("str1"), "--construction", "hutchinson", "--output", "csv"])),
        ("coherence_single", s(&["coherence", "--system", &f("single-reaction"), "--iterate", "5"])),
        ("coherence_str1_rounded", s(&["coherence", "--system", &f("str1"), "--iterate", "3", "--round-to", "1/1000"])),
        ("oracle_toy1", s(&["oracle-check", "--system", &f("toy1"), "--all"])),
        ("oracle_toy2_entity", s(&["oracle-check", "--system", &f("toy2"), "--entity", "aaaa", "--contexts", "all"])),
        ("generate_gamma", s(&["generate", "--family", "gamma-system"])),
    ]
}
