use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cell")).args(args).output().unwrap()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_report_logs_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let dump = dir.path().join("bus.bin");
    let out = cell(&[
        "run", "--config", s(&config("default.toml")), "--seed", "3", "--episodes", "2",
        "--report", s(&report), "--busdump", s(&dump),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("episode seed=")).count(), 2);
    assert!(stdout.lines().last().unwrap().starts_with("summary episodes=2"));

    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["episodes"].as_array().unwrap().len(), 2);
    assert_eq!(v["episodes"][1]["seed"], 4);
    assert!(v["note"].as_str().unwrap().contains("emulated"));
    for seed in [3, 4] {
        let name = format!("r.seed{seed}.transitions.ndjson");
        assert_eq!(v["episodes"][seed - 3]["transition_log"], name.as_str());
        let log = std::fs::read_to_string(dir.path().join(&name)).unwrap();
        let records = cell_core::harness::parse_log(&log).unwrap();
        assert_eq!(records[0].event, "RequestReceived");
    }

    let replay = cell(&["replay", s(&dump)]);
    assert!(replay.status.success());
    let text = String::from_utf8_lossy(&replay.stdout);
    let first = text.lines().next().unwrap();
    let fields: Vec<&str> = first.splitn(4, ' ').collect();
    assert_eq!(fields[2], "PickRequest", "{first}");
    assert!(fields[3].starts_with('{'));
    assert!(text.contains(" EStop ") || text.contains(" RobotMove "));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for sub in ["x", "y"] {
        let d = dir.path().join(sub);
        std::fs::create_dir(&d).unwrap();
        let report = d.join("report.json");
        let out = cell(&["run", "--headless", "--config", s(&config("near.toml")), "--seed", "9", "--report", s(&report)]);
        assert!(out.status.success());
        reports.push((std::fs::read(&report).unwrap(), std::fs::read(d.join("report.seed9.transitions.ndjson")).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn bad_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[scene]\ncount = 6\nshuffle = true\n").unwrap();
    let out = cell(&["run", "--config", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("shuffle"));

    let out = cell(&["run", "--config", s(&dir.path().join("missing.toml"))]);
    assert_eq!(out.status.code(), Some(2));

    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, [0xFFu8; 40]).unwrap();
    assert_eq!(cell(&["replay", s(&junk)]).status.code(), Some(2));
}

#[test]
fn stalled_perception_is_a_faulted_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("stall.toml");
    std::fs::write(&cfg, "[faults]\nstall_npu = true\n").unwrap();
    let report = dir.path().join("r.json");
    let out = cell(&["run", "--headless", "--config", s(&cfg), "--report", s(&report)]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["episodes"][0]["final_state"], "Halted");
    assert!(v["episodes"][0]["fault"].is_string());
}
