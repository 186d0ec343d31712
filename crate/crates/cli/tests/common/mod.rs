//! Committed CLI invocations and their expected JSON.
//! Floats compare within a relative tolerance; everything else is exact.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const FLOAT_TOL: f64 = 1e-9;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub struct Fixture {
    pub name: String,
    pub args: Vec<String>,
    pub exit: i64,
    pub stdout: Value,
}

pub fn fixtures() -> Vec<Fixture> {
    let mut out: Vec<Fixture> = fs::read_dir(fixture_dir())
        .expect("fixture dir")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            let v: Value = serde_json::from_str(&fs::read_to_string(&p).expect("read")).expect("fixture json");
            Fixture {
                name: p.file_stem().unwrap().to_string_lossy().into_owned(),
                args: v["args"]
                    .as_array()
                    .expect("args")
                    .iter()
                    .map(|a| a.as_str().expect("arg").to_string())
                    .collect(),
                exit: v["exit"].as_i64().expect("exit"),
                stdout: v["stdout"].clone(),
            }
        })
        .collect();
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

/// First mismatch between `got` and `want`, as a JSON path.
pub fn mismatch(got: &Value, want: &Value, path: &str) -> Option<String> {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) if a.is_f64() || b.is_f64() => {
            let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            ((x - y).abs() > FLOAT_TOL * (1.0 + x.abs().max(y.abs()))).then(|| format!("{path}: {x} vs {y}"))
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                return Some(format!("{path}: length {} vs {}", a.len(), b.len()));
            }
            a.iter()
                .zip(b)
                .enumerate()
                .find_map(|(i, (x, y))| mismatch(x, y, &format!("{path}[{i}]")))
        }
        (Value::Object(a), Value::Object(b)) => {
            if a.keys().ne(b.keys()) {
                return Some(format!("{path}: keys {:?} vs {:?}", a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>()));
            }
            a.iter().find_map(|(k, x)| mismatch(x, &b[k], &format!("{path}.{k}")))
        }
        _ => (got != want).then(|| format!("{path}: {got} vs {want}")),
    }
}

/// Checks one fixture against the binary; `Err` carries the reason.
pub fn check(f: &Fixture) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_weilsym"))
        .args(&f.args)
        .output()
        .map_err(|e| e.to_string())?;
    let code = out.status.code().unwrap_or(-1) as i64;
    if code != f.exit {
        return Err(format!("exit {code}, expected {}", f.exit));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let got = if text.trim().is_empty() {
        Value::Null
    } else {
        serde_json::from_str(&text).map_err(|e| format!("stdout is not JSON: {e}"))?
    };
    if f.exit != 0 && f.exit != 1 && out.stderr.is_empty() {
        return Err("failure without a diagnostic".into());
    }
    match mismatch(&got, &f.stdout, "$") {
        Some(m) => Err(m),
        None => Ok(()),
    }
}
