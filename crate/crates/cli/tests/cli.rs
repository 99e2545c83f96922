use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphonlab"))
        .args(args)
        .env_remove("GRAPHONLAB_SEED")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("graphonlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["density", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(
        run(&["degree", "--graphon", "builtin:nope", "--x", "0.5"])
            .status
            .code(),
        Some(2)
    );
    let out = run(&["degree", "--graphon", "builtin:half", "--x", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn violated_constraints_exit_with_one() {
    let file = scratch(
        "violated.json",
        r#"{"constraints": [{"name": "edge", "lhs": {"graph": {"n": 2, "edges": [[0, 1]]}}, "rhs": 0.3}]}"#,
    );
    let out = run(&[
        "check",
        "--constraints",
        file.to_str().unwrap(),
        "--graphon",
        "builtin:half",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("name,kind,residual,stderr,tol,verdict"));
    assert!(text.contains("violated"), "{text}");
}

#[test]
fn json_output_mirrors_csv() {
    let csv = run(&["degree", "--graphon", "builtin:half", "--x", "0.25,0.75"]);
    let json = run(&["degree", "--graphon", "builtin:half", "--x", "0.25,0.75", "--json"]);
    assert!(csv.status.success() && json.status.success());
    let rows: Vec<serde_json::Map<String, serde_json::Value>> = serde_json::from_slice(&json.stdout).unwrap();
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(rows.len(), 2);
    for (row, line) in rows.iter().zip(lines) {
        for (key, cell) in header.iter().zip(line.split(',')) {
            let v = &row[*key];
            let shown = v.as_str().map_or_else(|| v.to_string(), str::to_string);
            assert_eq!(shown, cell);
        }
    }
    assert_eq!(rows[1]["degree"].as_f64(), Some(0.75));
}
