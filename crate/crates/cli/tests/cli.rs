use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn corpus(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(format!("{name}.pl"))
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_tabling"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tabling-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn greedy_shortest_path() {
    let (out, _, code) = run(&["eval", &corpus("shortest_path"), "--engine=greedy"]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l == "p(a,c,1)."));
}

#[test]
fn exhaustive_check_of_unsound_max() {
    let (out, _, code) = run(&["check", &corpus("unsound_max"), "--strategy=exhaustive"]);
    assert_eq!(code, 1);
    assert!(out.contains("witness: {p(0), p(1)}"), "{out}");
}

#[test]
fn cyclic_reference_diverges() {
    let (out, _, code) = run(&["eval", &corpus("cyclic_path"), "--engine=reference", "--fuel=1000"]);
    assert_eq!(code, 2);
    assert!(out.starts_with("diverged:"));
}

#[test]
fn diff_exit_codes() {
    assert_eq!(run(&["diff", &corpus("unsound_max")]).2, 1);
    assert_eq!(run(&["diff", &corpus("shortest_path")]).2, 0);
    assert_eq!(run(&["diff", &corpus("even_odd")]).2, 2);
}

#[test]
fn static_errors_exit_3() {
    let bad_mode = scratch("first.pl", ":- table p(first). p(1).\n");
    let (_, err, code) = run(&["eval", bad_mode.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(err.contains("unsupported_mode"), "{err}");

    let syntax = scratch("syntax.pl", "p(a) :- .\n");
    let (out, _, code) = run(&["eval", syntax.to_str().unwrap(), "--json"]);
    assert_eq!(code, 3);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "error");
    assert_eq!(v["kind"], "parse");

    let (_, _, code) = run(&["eval", "/nonexistent/program.pl"]);
    assert_eq!(code, 3);
}

#[test]
fn runtime_lattice_errors_exit_4() {
    let partial = scratch(
        "partial.pl",
        "j(a,a,a). j(b,b,b).\n:- table p(lattice(j/3)).\np(a). p(b).\n",
    );
    let (out, _, code) = run(&["eval", partial.to_str().unwrap(), "--json"]);
    assert_eq!(code, 4);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["kind"], "join_undefined");
}

#[test]
fn json_answers_match_text_answers() {
    for name in ["least_model", "unsound_max", "shortest_path", "lub", "strat_path", "longest_path", "even_odd"] {
        for engine in ["reference", "greedy"] {
            let engine = format!("--engine={engine}");
            let (text, _, code) = run(&["eval", &corpus(name), &engine]);
            if code != 0 {
                continue;
            }
            let (json, _, json_code) = run(&["eval", &corpus(name), &engine, "--json"]);
            assert_eq!(code, json_code);
            let v: Value = serde_json::from_str(&json).unwrap();
            let from_json: Vec<String> = v["answers"]
                .as_array()
                .unwrap()
                .iter()
                .map(|a| format!("{}.", a.as_str().unwrap()))
                .collect();
            let from_text: Vec<String> = text.lines().map(str::to_owned).collect();
            assert_eq!(from_json, from_text, "{name} {engine}");
        }
    }
}

#[test]
fn sampled_check_is_reproducible() {
    let args = ["check", &corpus("even_odd"), "--strategy=sampled", "--seed=42", "--json"];
    let (a, _, code) = run(&args);
    let (b, _, _) = run(&args);
    assert_eq!(code, 1);
    assert_eq!(a, b);
}

#[test]
fn strata_json() {
    let (out, _, code) = run(&["strata", &corpus("even_odd_also"), "--json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let first: BTreeSet<&str> = v["strata"][0]["predicates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p.as_str().unwrap())
        .collect();
    assert_eq!(first, BTreeSet::from(["even", "odd"]));
    assert_eq!(v["strata"][1]["uses"][0], 0);
}

#[test]
fn max_atoms_is_bounded() {
    let (_, _, code) = run(&["check", &corpus("unsound_max"), "--max-atoms=25"]);
    assert_eq!(code, 2);
}
