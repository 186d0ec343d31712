//! Runs every committed CLI invocation and compares its JSON field by field.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::{check, fixtures, mismatch};
use serde_json::Value;

#[test]
fn every_fixture_reproduces() {
    let all = fixtures();
    assert!(all.len() >= 10);
    let failures: Vec<String> = all
        .iter()
        .filter_map(|f| check(f).err().map(|e| format!("{}: {e}", f.name)))
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

/// Every `$ weilsym ...` line in the README has a fixture with the same arguments.
#[test]
fn readme_invocations_have_fixtures() {
    let readme = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).expect("README");
    let known: Vec<Vec<String>> = fixtures().into_iter().map(|f| f.args).collect();
    let mut seen = 0;
    for line in readme.lines() {
        let Some(cmd) = line.trim().strip_prefix("$ weilsym ") else {
            continue;
        };
        let args = shlex::split(cmd).expect("README invocation quotes");
        assert!(known.contains(&args), "README invocation without fixture: {cmd}");
        seen += 1;
    }
    assert_eq!(seen, known.len(), "every fixture is documented in the README");
}

#[test]
fn json_only_on_stdout() {
    let out = Command::new(env!("CARGO_BIN_EXE_weilsym"))
        .args(["symbol", "--method", "nope", "x", "x"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn mismatch_tolerates_float_noise_only() {
    let a: Value = serde_json::json!({"v": 1.0, "s": "1/2", "k": [1, 2]});
    let b: Value = serde_json::json!({"v": 1.0 + 1e-12, "s": "1/2", "k": [1, 2]});
    assert_eq!(mismatch(&a, &b, "$"), None);
    let c: Value = serde_json::json!({"v": 1.001, "s": "1/2", "k": [1, 2]});
    assert!(mismatch(&a, &c, "$").is_some());
    let d: Value = serde_json::json!({"v": 1.0, "s": "1/3", "k": [1, 2]});
    assert!(mismatch(&a, &d, "$").is_some());
}
