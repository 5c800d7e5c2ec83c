use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stopstare"));
    c.env_remove("SSA_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exact_opt_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = write(dir.path(), "tiny.txt", "# G1\n2 1\n0 1 1.0\n");
    let v = json(&run(&[
        "exact",
        "--graph",
        s(&tiny),
        "--model",
        "ic",
        "--k",
        "1",
    ]));
    assert_eq!(v["mode"], "opt");
    assert_eq!(v["seeds"], serde_json::json!([0]));
    assert_eq!(v["influence"], 2.0);

    let g2 = write(dir.path(), "g2.txt", "3 3\n0 1 0.5\n1 2 0.5\n2 0 0.5\n");
    let v = json(&run(&[
        "exact",
        "influence",
        "--graph",
        s(&g2),
        "--model",
        "ic",
        "--seeds",
        "0",
    ]));
    assert_eq!(v["influence"], 1.75);
    assert_eq!(v["outcomes_enumerated"], 8);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.txt", "3 2\n0 1 0.5\n1 2 0.5\n");
    for args in [
        vec!["im", "--graph", s(&g), "--k", "0"],
        vec!["im", "--graph", s(&g), "--k", "4"],
        vec!["im", "--graph", s(&g), "--k", "1", "--eps", "1.5"],
        vec!["im", "--graph", s(&g), "--k", "1", "--delta", "nope"],
        vec![
            "im",
            "--graph",
            s(&g),
            "--k",
            "1",
            "--algo",
            "dssa",
            "--eps1",
            "0.1",
            "--eps2",
            "0.1",
            "--eps3",
            "0.1",
        ],
        vec![
            "im",
            "--graph",
            s(&g),
            "--k",
            "1",
            "--algo",
            "ssa",
            "--eps1",
            "0.1",
        ],
        vec![
            "im",
            "--graph",
            s(&g),
            "--k",
            "1",
            "--algo",
            "ssa",
            "--eps1",
            "1",
            "--eps2",
            "0.5",
            "--eps3",
            "0.5",
        ],
        vec!["exact", "--graph", s(&g)],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    assert_eq!(
        run(&["im", "--graph", s(&missing), "--k", "1"])
            .status
            .code(),
        Some(1)
    );
    let bad = write(dir.path(), "bad.txt", "3 1\n0 7 0.5\n");
    let out = run(&["im", "--graph", s(&bad), "--k", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let heavy = write(dir.path(), "heavy.txt", "3 2\n0 2 0.8\n1 2 0.8\n");
    assert_eq!(
        run(&["im", "--graph", s(&heavy), "--model", "lt", "--k", "1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn im_record_fields() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.txt", "4 3\n0 1 1\n0 2 1\n0 3 1\n");
    let out = run(&[
        "im",
        "--graph",
        s(&g),
        "--model",
        "ic",
        "--algo",
        "ssa",
        "--k",
        "1",
        "--eps",
        "0.2",
        "--seed",
        "3",
        "--no-timing",
    ]);
    let raw = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(
        raw.starts_with(r#"{"schema_version":1,"command":"im","algo":"ssa","model":"ic","#),
        "{raw}"
    );
    assert!(raw.trim_end().ends_with(r#""wall_ms":null}"#), "{raw}");
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["seeds"], serde_json::json!([0]));
    assert_eq!(v["delta"], 0.25);
    assert_eq!(v["wall_ms"], Value::Null);
    assert_eq!(v["rng_seed"], 3);
    assert_eq!(
        v["rr_count_total"].as_u64().unwrap(),
        v["rr_count_main"].as_u64().unwrap() + v["rr_count_verify"].as_u64().unwrap()
    );
    assert_eq!(
        v["peak_pool_bytes"].as_u64().unwrap(),
        4 * v["pool_items"].as_u64().unwrap()
    );
    assert!(v["eps_split"].is_object());

    let timed = json(&run(&["im", "--graph", s(&g), "--k", "1"]));
    assert!(timed["wall_ms"].as_f64().unwrap() >= 0.0);
    assert_eq!(timed["algo"], "dssa");
    assert_eq!(timed["eps_split"], Value::Null);
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.txt", "4 3\n0 1 1\n0 2 1\n0 3 1\n");
    let out = bin()
        .args(["im", "--graph", s(&g), "--k", "1", "--no-timing"])
        .env("SSA_THREADS", "3")
        .output()
        .unwrap();
    let v = json(&out);
    assert_eq!(v["threads"], 3);
    let single = json(&run(&[
        "im",
        "--graph",
        s(&g),
        "--k",
        "1",
        "--no-timing",
        "--threads",
        "1",
    ]));
    assert_eq!(v["seeds"], single["seeds"]);
    assert_eq!(v["rr_count_total"], single["rr_count_total"]);
}

#[test]
fn convert_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let text = write(dir.path(), "g.txt", "4 3\n0 1\n2 1\n1 3\n");
    let bin_path = dir.path().join("g.bin");
    let back = dir.path().join("back.txt");
    assert!(run(&[
        "convert",
        "--input",
        s(&text),
        "--output",
        s(&bin_path),
        "--auto-weight"
    ])
    .status
    .success());
    assert!(
        run(&["convert", "--input", s(&bin_path), "--output", s(&back)])
            .status
            .success()
    );
    assert_eq!(
        std::fs::read_to_string(&back).unwrap(),
        "4 3\n0 1 0.5\n1 3 1\n2 1 0.5\n"
    );

    let und = dir.path().join("und.txt");
    assert!(run(&[
        "convert",
        "--input",
        s(&text),
        "--output",
        s(&und),
        "--to",
        "text",
        "--undirected",
        "--auto-weight"
    ])
    .status
    .success());
    assert!(std::fs::read_to_string(&und).unwrap().starts_with("4 6\n"));

    // the binary file feeds the other commands directly
    let v = json(&run(&[
        "exact",
        "--graph",
        s(&bin_path),
        "--model",
        "lt",
        "--seeds",
        "0",
    ]));
    assert_eq!(v["influence"], 2.0);
}

#[test]
fn tvm_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.txt", "2 1\n0 1 1.0\n");
    let w = write(dir.path(), "w.txt", "1 1\n");
    let v = json(&run(&[
        "tvm",
        "--graph",
        s(&g),
        "--weights",
        s(&w),
        "--k",
        "1",
        "--model",
        "ic",
        "--no-timing",
    ]));
    assert_eq!(v["command"], "tvm");
    assert_eq!(v["seeds"], serde_json::json!([0]));
    assert_eq!(v["est_influence"], 1.0);
    assert_eq!(v["gamma"], 1.0);

    let out = run(&["im", "--graph", s(&g), "--k", "1", "--csv", "--no-timing"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    assert!(lines[0].starts_with("schema_version,command,algo"));

    let zero = write(dir.path(), "zero.txt", "0 0\n");
    assert_eq!(
        run(&["tvm", "--graph", s(&g), "--weights", s(&zero), "--k", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn eval_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.txt", "3 3\n0 1 0.5\n1 2 0.5\n2 0 0.5\n");
    let v = json(&run(&[
        "eval",
        "--graph",
        s(&g),
        "--model",
        "ic",
        "--seeds",
        "0",
        "--runs",
        "40000",
        "--seed",
        "1",
    ]));
    let (mean, se) = (v["mean"].as_f64().unwrap(), v["stderr"].as_f64().unwrap());
    assert!((mean - 1.75).abs() < 4.0 * se, "{mean} ± {se}");

    let out = dir.path().join("bench.jsonl");
    assert!(run(&[
        "bench",
        "--graph",
        s(&g),
        "--model",
        "ic",
        "--ks",
        "1,2",
        "--eps",
        "0.2",
        "--no-timing",
        "--output",
        s(&out)
    ])
    .status
    .success());
    let records: Vec<Value> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 4);
    let pairs: Vec<(String, u64)> = records
        .iter()
        .map(|r| {
            (
                r["algo"].as_str().unwrap().to_string(),
                r["k"].as_u64().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        pairs,
        vec![
            ("ssa".into(), 1),
            ("ssa".into(), 2),
            ("dssa".into(), 1),
            ("dssa".into(), 2)
        ]
    );
}

#[test]
fn guarantee_suite() {
    let out = run(&[
        "bench",
        "--suite",
        "guarantees",
        "--model",
        "ic",
        "--trials",
        "30",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["holds"], true);
        assert_eq!(v["trials"], 30);
    }
    assert_eq!(text.lines().count(), 2);
}
