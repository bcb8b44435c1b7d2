use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn run(args: &[&str]) -> (String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_tabling"))
        .args(args)
        .output()
        .expect("binary runs");
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap())
}

fn corpus() -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "pl"))
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

/// Compares against the checked-in file, or rewrites it when
/// `UPDATE_GOLDEN` is set.
fn compare(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

#[test]
fn eval_matches_golden_for_both_engines() {
    for name in corpus() {
        let file = corpus_dir().join(format!("{name}.pl"));
        for engine in ["reference", "greedy"] {
            let (out, code) = run(&["eval", file.to_str().unwrap(), &format!("--engine={engine}")]);
            compare(&format!("{name}.{engine}.txt"), &format!("{out}exit {code}\n"));
        }
    }
}

#[test]
fn diff_matches_golden() {
    for name in corpus() {
        let file = corpus_dir().join(format!("{name}.pl"));
        let (out, code) = run(&["diff", file.to_str().unwrap()]);
        compare(&format!("{name}.diff.txt"), &format!("{out}exit {code}\n"));
    }
}

#[test]
fn check_matches_golden() {
    for name in ["unsound_max", "shortest_path", "lub", "strat_path", "least_model"] {
        let file = corpus_dir().join(format!("{name}.pl"));
        let (out, code) = run(&["check", file.to_str().unwrap()]);
        compare(&format!("{name}.check.txt"), &format!("{out}exit {code}\n"));
    }
}
