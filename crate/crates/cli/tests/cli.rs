//! End-to-end runs of the quadmap binary: exit codes, report files, and
//! determinism under the seeded fuzz driver.

use std::path::Path;
use std::process::{Command, Output};

fn quadmap(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_quadmap"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn decompose_verify_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("map.txt");
    let report = dir.path().join("report.json");
    std::fs::write(
        &input,
        "over Q vars 5 map [x1+x2*x5, x2+x1*x4-x3*x5, x3+x2*x4, x4, x5]\n",
    )
    .unwrap();

    let out = quadmap(
        &[
            "decompose",
            "--input",
            input.to_str().unwrap(),
            "--output",
            report.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["verified"], true);
    assert_eq!(v["keller"], true);
    assert_eq!(v["rank"], 3);
    assert_eq!(v["certificate"]["factors"].as_array().unwrap().len(), 3);

    let out = quadmap(&["verify", "--input", report.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0);

    // Tamper with one factor: the binary must exit 1 and report a discrepancy.
    let mut tampered = v.clone();
    tampered["certificate"]["factors"][0]["a"] = serde_json::json!("x1*x4");
    let bad = dir.path().join("tampered.json");
    std::fs::write(&bad, serde_json::to_string(&tampered).unwrap()).unwrap();
    let out = quadmap(&["verify", "--input", bad.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 1);
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["verified"], false);
    assert!(!rep["discrepancy"].is_null());
}

#[test]
fn parse_error_exits_2_and_writes_no_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = quadmap(
        &[
            "classify",
            "--inline",
            "over Q vars 2 map [x1**2, x2]",
            "--output",
            report.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&out), 2);
    assert!(!Path::new(&report).exists(), "no report on parse failure");
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 1"), "no position in: {msg}");
}

#[test]
fn field_conflict_exits_2() {
    let out = quadmap(
        &[
            "classify",
            "--field",
            "GF(7)",
            "--inline",
            "over Q vars 2 map [x1*x2, 0]",
        ],
        &[],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn rank_too_high_is_a_generic_error() {
    let out = quadmap(
        &[
            "decompose",
            "--inline",
            "over Q vars 5 map [x1, x2+x1^2, x3+x2^2, x4+x3^2, x5+x4^2]",
        ],
        &[],
    );
    assert_eq!(code(&out), 4);
}

#[test]
fn classify_reads_gf2_maps() {
    let out = quadmap(
        &[
            "classify",
            "--field",
            "GF(2)",
            "--inline",
            "over GF(2) vars 6 map [x2*x6, x1*x5+x3*x6, x2*x5, x5*x6, 0, 0]",
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["rank"], 3);
    assert_eq!(rep["kind"], "rk3");
    assert_eq!(rep["report"]["case"], 3);
    assert_eq!(rep["verified"], true);
}

#[test]
fn fuzz_reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |path: &Path| {
        vec![
            "fuzz".to_string(),
            "--field".into(),
            "GF(5)".into(),
            "--count".into(),
            "200".into(),
            "--seed".into(),
            "7".into(),
            "--output".into(),
            path.to_str().unwrap().to_string(),
        ]
    };
    let run = |path: &Path, threads: &str| {
        let argv = args(path);
        let argv: Vec<&str> = argv.iter().map(|s| s.as_str()).collect();
        let out = quadmap(&argv, &[("QUADMAP_THREADS", threads)]);
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    };
    run(&a, "4");
    run(&b, "1");
    let ba = std::fs::read(&a).unwrap();
    let bb = std::fs::read(&b).unwrap();
    assert_eq!(ba, bb, "fuzz reports differ across runs/thread counts");

    let v: serde_json::Value = serde_json::from_slice(&ba).unwrap();
    assert_eq!(v["summary"]["failures"], 0);
    assert_eq!(v["summary"]["total"], 200);
}
