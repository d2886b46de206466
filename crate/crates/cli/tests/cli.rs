use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hiergap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hiergap"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn sampling_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.alist", "b.alist"] {
        let out = hiergap(dir.path(), &["sample", "--n", "30", "--dv", "3", "--dc", "5", "--seed", "7", "--out", name]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.alist"), read("b.alist"));
    assert_eq!(read("a.alist.json"), read("b.alist.json"));
}

#[test]
fn sampling_reports_degrees_and_rejects_bad_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = hiergap(dir.path(), &["sample", "--n", "30", "--seed", "1", "--report-degrees"]);
    assert!(out.status.success());
    let v = json(&out);
    let total: u64 = v["variable"].as_object().unwrap().values().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 30);

    let out = hiergap(dir.path(), &["sample", "--n", "31"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("not divisible"), "{}", stderr(&out));
}

#[test]
fn sa_construction_round_trips_through_verify() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(hiergap(p, &["sample", "--n", "30", "--dc", "5", "--seed", "417204", "--out", "code.alist"]).status.success());
    let out = hiergap(
        p,
        &["construct", "--code", "code.alist", "--hierarchy", "sa", "--rounds", "3", "--errors", "16", "--error-seed", "5", "--out", "run"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["gap"]["value_normalized"], "1/2");
    assert_eq!(v["gap"]["decoder_fails"], true);
    assert_eq!(v["gap"]["instance"]["code_seed"], 417204);
    assert_eq!(v["verification"]["feldman_objective"], "1/2");

    let out = hiergap(
        p,
        &["verify", "--code", "code.alist", "--received", "run/received.txt", "--solution", "run/solution.json", "--gap", "run/gap.json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(json(&out)["gap_consistent"], true);

    // A report whose verdict was flipped no longer agrees.
    let gap = std::fs::read_to_string(p.join("run/gap.json")).unwrap();
    std::fs::write(p.join("run/gap.json"), gap.replace("\"decoder_fails\": true", "\"decoder_fails\": false")).unwrap();
    let out = hiergap(
        p,
        &["verify", "--code", "code.alist", "--received", "run/received.txt", "--solution", "run/solution.json", "--gap", "run/gap.json"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lasserre_construction_and_degree_check() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(hiergap(p, &["sample", "--n", "15", "--dc", "9", "--seed", "71", "--out", "c.alist"]).status.success());
    let out = hiergap(p, &["construct", "--code", "c.alist", "--hierarchy", "lasserre", "--rounds", "2", "--seed", "71", "--out", "l"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(json(&out)["gap"]["value_normalized"], "1/2");
    let out = hiergap(p, &["verify", "--code", "c.alist", "--received", "l/received.txt", "--solution", "l/solution.json", "--gap", "l/gap.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(json(&out)["hierarchy"], "Lasserre");

    assert!(hiergap(p, &["sample", "--n", "14", "--dv", "2", "--dc", "7", "--out", "c7.alist"]).status.success());
    let out = hiergap(p, &["construct", "--code", "c7.alist", "--hierarchy", "lasserre"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("3·2^i + 3"));
}

#[test]
fn lp_decode_agrees_with_gap_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(hiergap(p, &["sample", "--n", "30", "--dc", "5", "--seed", "417204", "--out", "code.alist"]).status.success());
    let out = hiergap(p, &["lp-decode", "--code", "code.alist"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["decode"]["codeword"], serde_json::json!(vec![0; 30]));
    assert_eq!(v["gap"]["decoder_fails"], false);

    let out = hiergap(p, &["lp-decode", "--code", "code.alist", "--errors", "16", "--error-seed", "5"]);
    let v = json(&out);
    assert_eq!(v["decode"]["codeword"], Value::Null);
    assert_eq!(v["gap"]["decoder_fails"], true);

    std::fs::write(p.join("bad.alist"), "3 2\nnot numbers\n").unwrap();
    let out = hiergap(p, &["lp-decode", "--code", "bad.alist"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("alist parse error"));
}

#[test]
fn gap_report_trials_are_ordered_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(hiergap(p, &["sample", "--n", "15", "--dc", "9", "--seed", "71", "--out", "c.alist"]).status.success());
    let args = ["gap-report", "--code", "c.alist", "--hierarchy", "lasserre", "--errors", "8", "--trials", "3", "--seed", "10"];
    let a = hiergap(p, &[&args[..], &["--jobs", "1"]].concat());
    let b = hiergap(p, &[&args[..], &["--jobs", "3"]].concat());
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["decoder_fails"], 3);
    let seeds: Vec<u64> = v["reports"].as_array().unwrap().iter().map(|r| r["instance"]["error_seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, [10, 11, 12]);
}

#[test]
fn exit_codes_for_caps_and_usage() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(hiergap(p, &["sample", "--n", "30", "--dc", "5", "--seed", "417204", "--out", "code.alist"]).status.success());
    let out = hiergap(p, &["construct", "--code", "code.alist", "--hierarchy", "sa", "--rounds", "3", "--budget", "5"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert_eq!(hiergap(p, &["no-such-command"]).status.code(), Some(4));
    assert_eq!(hiergap(p, &["predicates", "--dc", "4"]).status.code(), Some(4));
}

#[test]
fn predicates_and_hvc_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = hiergap(dir.path(), &["predicates", "--dc", "7"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["q"], 4);
    assert_eq!(v["entries"].as_array().unwrap().len(), 4);

    let out = hiergap(dir.path(), &["hvc", "--n", "12", "--beta", "1/2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["lasserre"]["normalized_value"], "1/2");
    assert_eq!(v["lasserre"]["verified"], true);
}
