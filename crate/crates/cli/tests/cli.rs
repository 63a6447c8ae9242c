use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rmrlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmrlab")).args(args).env_remove("RMRLAB_SEED").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn round_robin_le2_passes_safety() {
    let o = rmrlab(&["run", "--subject", "le2", "--schedule", "round-robin"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["verdict"]["status"], "pass");
    let statuses: Vec<_> = v["snapshot"]["processes"].as_array().unwrap().iter().map(|p| p["status"].clone()).collect();
    assert!(statuses.contains(&serde_json::json!({"returned": "win"})));
    assert!(statuses.contains(&serde_json::json!({"returned": "lose"})));
}

#[test]
fn aborting_both_at_the_start_is_legal() {
    let o = rmrlab(&["run", "--subject", "le2", "--schedule", "round-robin", "--abort", "0:0", "--abort", "1:0"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    for p in v["snapshot"]["processes"].as_array().unwrap() {
        assert_eq!(p["abort_received"], true);
    }
}

#[test]
fn inline_schedule_from_flag() {
    let o = rmrlab(&["run", "--subject", "le2", "--schedule", "p0,p0,p1!,p1"]);
    assert_eq!(code(&o), 0);
    let lineage = &json(&o)["snapshot"]["lineage"];
    assert_eq!(lineage, &serde_json::json!(["p0", "p0", "p1!", "p1"]));
}

#[test]
fn deadlocking_pair_never_finishes() {
    let o = rmrlab(&["run", "--subject", "deadlocking-pair", "--schedule", "round-robin", "--max-steps", "500"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn safety_witness_replays_to_the_same_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    let o = rmrlab(&["check", "safety", "--subject", "double-winner", "--n", "2", "--witness", path(&w)]);
    assert_eq!(code(&o), 2);
    let reason = json(&o)["verdict"]["reason"].clone();
    let r = rmrlab(&["run", "--config", path(&w)]);
    assert_eq!(code(&r), 2);
    assert_eq!(json(&r)["verdict"]["reason"], reason);
}

#[test]
fn abort_and_deadlock_witnesses_replay() {
    let dir = tempfile::tempdir().unwrap();
    for (checker, subject) in [("abort", "abort-ignoring-spinner"), ("deadlock", "deadlocking-pair")] {
        let w = dir.path().join(format!("{checker}.json"));
        let o = rmrlab(&["check", checker, "--subject", subject, "--n", "2", "--witness", path(&w)]);
        assert_eq!(code(&o), 2, "{checker} on {subject}");
        let r = rmrlab(&["run", "--config", path(&w)]);
        assert_eq!(code(&r), 2, "replay of {checker} on {subject}");
    }
}

#[test]
fn correct_subjects_pass_their_checks() {
    for args in [
        ["check", "safety", "--subject", "le2", "--n", "2"],
        ["check", "abort", "--subject", "le2", "--n", "2"],
        ["check", "deadlock", "--subject", "tournament", "--n", "4"],
        ["check", "deadlock", "--subject", "waits-for-peer", "--n", "2"],
        ["check", "linearizable", "--subject", "cas-contended", "--n", "3"],
    ] {
        let o = rmrlab(&args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn explore_reports_strong_bivalence_of_the_initial_state() {
    let o = rmrlab(&["explore", "--subject", "le2"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["classification"], "strongly-bivalent");
    assert_eq!(v["vectors"], serde_json::json!([["win", "lose"], ["lose", "win"]]));
    assert_eq!(v["complete"], true);
}

#[test]
fn adversary_writes_report_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let csv = dir.path().join("hist.csv");
    let o = rmrlab(&[
        "adversary", "--subject", "tournament", "--n", "8", "--rounds", "2", "--ell", "2", "--out", path(&out), "--csv",
        path(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rounds_completed"], 2);
    assert_eq!(v["rounds"].as_array().unwrap().len(), 3);
    let hist = std::fs::read_to_string(&csv).unwrap();
    assert!(hist.starts_with("round,rmr,processes\n"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = rmrlab(&["adversary", "--subject", "tournament-doorway", "--n", "16", "--rounds", "2", "--ell", "1"]);
    let b = rmrlab(&["adversary", "--subject", "tournament-doorway", "--n", "16", "--rounds", "2", "--ell", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let a = rmrlab(&["run", "--subject", "tournament", "--n", "4", "--schedule", "random", "--seed", "9"]);
    let b = rmrlab(&["run", "--subject", "tournament", "--n", "4", "--schedule", "random", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn env_seed_overrides_config() {
    let o = Command::new(env!("CARGO_BIN_EXE_rmrlab"))
        .args(["run", "--subject", "tournament", "--n", "4", "--schedule", "random", "--seed", "1"])
        .env("RMRLAB_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(json(&o)["seed"], 77);
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"subject": "le2", "schedule": ["p0", "p1"], "abort_injections": [[1, 1]]}"#).unwrap();
    let o = rmrlab(&["run", "--config", path(&cfg)]);
    assert_eq!(json(&o)["snapshot"]["lineage"], serde_json::json!(["p0", "p1!", "p1"]));
    let o = rmrlab(&["run", "--config", path(&cfg), "--schedule", "p1"]);
    assert_eq!(json(&o)["snapshot"]["lineage"], serde_json::json!(["p1", "p1!"]));
}

#[test]
fn exit_codes_for_bad_input() {
    assert_eq!(code(&rmrlab(&["run", "--subject", "no-such-thing"])), 64);
    assert_eq!(code(&rmrlab(&["frobnicate"])), 64);
    assert_eq!(code(&rmrlab(&["run", "--subject", "le2", "--schedule", "q7"])), 64);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"subject\": ").unwrap();
    assert_eq!(code(&rmrlab(&["run", "--config", path(&bad)])), 65);
    std::fs::write(&bad, r#"{"subjekt": "le2"}"#).unwrap();
    assert_eq!(code(&rmrlab(&["run", "--config", path(&bad)])), 65);
    assert_eq!(code(&rmrlab(&["run", "--subject", "le2", "--n", "3"])), 65);
    let missing = dir.path().join("missing").join("out.json");
    assert_eq!(code(&rmrlab(&["run", "--subject", "le2", "--out", path(&missing)])), 74);
    assert_eq!(code(&rmrlab(&["--help"])), 0);
}

#[test]
fn chained_cas_mix_fails_linearizability_with_replayable_witness() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("cas.json");
    let o = rmrlab(&["check", "linearizable", "--subject", "cas-demo", "--n", "3", "--witness", path(&w)]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&rmrlab(&["run", "--config", path(&w)])), 2);
}
