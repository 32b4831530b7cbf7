use std::path::Path;
use std::process::{Command, Output};

use lsc_core::pipe::{diagram_from_json, space_time_volume, validate_pipe_diagram};

fn lsc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsc"))
        .args(args)
        .current_dir(dir)
        .env("TOPOLS_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ghz(n: usize) -> String {
    let mut s = format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[{n}];\nh q[0];\n");
    for i in 0..n - 1 {
        s += &format!("cx q[{i}],q[{}];\n", i + 1);
    }
    s
}

#[test]
fn compile_writes_diagram_and_report() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ghz16.qasm"), ghz(16)).unwrap();
    let out = lsc(
        &[
            "compile",
            "ghz16.qasm",
            "--grid",
            "4x4",
            "--opt",
            "full",
            "--out",
            "ghz.json",
            "--stats",
            "stats.json",
            "--mesh",
            "ghz.obj",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let p =
        diagram_from_json(&std::fs::read_to_string(dir.path().join("ghz.json")).unwrap()).unwrap();
    assert!(validate_pipe_diagram(&p).is_empty());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stats.json")).unwrap())
            .unwrap();
    assert_eq!(report["volume"], space_time_volume(&p));
    assert_eq!(report["time_steps"], p.time_steps());
    assert_eq!(report["config"]["grid"], serde_json::json!([4, 4]));
    assert_eq!(report["config"]["iterations"], 1000);
    let obj = std::fs::read_to_string(dir.path().join("ghz.obj")).unwrap();
    assert!(obj.lines().any(|l| l.starts_with("v ")));
    let stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, report);
}

#[test]
fn capacity_error_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("big.qasm"), ghz(16)).unwrap();
    let out = lsc(&["compile", "big.qasm", "--grid", "2x2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("do not fit"));
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.qasm"), "qreg q[1];\nmeasure q[0];\n").unwrap();
    assert_eq!(
        lsc(&["compile", "m.qasm"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        lsc(&["compile", "missing.qasm"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        lsc(&["compile", "m.qasm", "--grid", "4by4"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lsc(&["bench", "--families", "qft", "--sizes", "4"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn verify_flag_reports_true() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("x.qasm"),
        "qreg q[3];\nh q[0];\nt q[1];\ncx q[0],q[2];\nrz(0.3) q[2];\ncx q[2],q[1];\ns q[0];\nx q[1];\n",
    )
    .unwrap();
    let out = lsc(
        &[
            "compile",
            "x.qasm",
            "--opt",
            "full",
            "--verify",
            "--dump-zx",
            "zx.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verified"], true);
    assert!(dir.path().join("x.pipe.json").exists());
    let zx = std::fs::read_to_string(dir.path().join("zx.json")).unwrap();
    assert!(lsc_core::zx::diagram_from_json(&zx).is_ok());
}

#[test]
fn bench_table_has_both_compilers() {
    let dir = tempfile::tempdir().unwrap();
    let out = lsc(
        &[
            "bench",
            "--families",
            "ghz,bv",
            "--sizes",
            "4",
            "--grid",
            "2x2",
            "--out",
            "t.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("family,size,grid,compiler,volume"));
    assert_eq!(lines.iter().filter(|l| l.contains(",search,")).count(), 2);
    assert_eq!(lines.iter().filter(|l| l.contains(",baseline,")).count(), 2);
}

#[test]
fn ladder_bench_reports_two_layers() {
    let dir = tempfile::tempdir().unwrap();
    let out = lsc(
        &["bench", "--families", "ladder", "--sizes", "5,8,16"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .filter(|r: &Vec<&str>| r[3] == "search")
        .collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r[7], "2", "{r:?}");
    }
}
