//! End-to-end tests of the hoverdock binary: argument handling, exit codes
//! and the files each subcommand leaves behind.

use std::path::PathBuf;
use std::process::{Command, Output};

use hoverdock_core::scenario::parse_scenario;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hoverdock"))
}

fn scenario_path(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

#[test]
fn dump_defaults_round_trips_through_the_parser() {
    let out = bin().arg("--dump-defaults").output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let cfg = parse_scenario(&text).expect("dumped defaults must parse");
    cfg.validate().expect("dumped defaults must validate");
    assert_eq!(cfg.dump(), text, "dump must be a fixed point of parse");
}

#[test]
fn run_docks_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--scenario", &scenario_path("pool.scn"), "--seed", "1"])
        .args(["--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("outcome = Docked"));

    let log = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(log.starts_with("t,phase,x,y,z"));
    assert!(log.contains("transition Landing3 -> Docked"));
    let metrics = std::fs::read_to_string(dir.path().join("metrics.txt")).unwrap();
    assert_eq!(metrics, stdout(&out));
}

#[test]
fn run_reports_timeout_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--scenario", &scenario_path("pool.scn"), "--seed", "1"])
        .args(["--out", dir.path().to_str().unwrap()])
        .args(["--max-duration", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("outcome = TimedOut"));
}

#[test]
fn unknown_scenario_key_fails_with_its_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path: PathBuf = dir.path().join("bad.scn");
    std::fs::write(&path, "seed = 1\nstart.x = -20\nno.such.key = 5\n").unwrap();
    let out = bin()
        .args(["run", "--scenario", path.to_str().unwrap()])
        .args(["--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 3"), "stderr was: {err}");
    assert!(err.contains("no.such.key"), "stderr was: {err}");
}

#[test]
fn batch_exit_code_tracks_the_success_floor() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["batch", "--scenario", &scenario_path("pool.scn"), "--seeds", "3"])
        .args(["--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("docked 3/3"));
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(summary, stdout(&out));

    // Starving the runs of time forces timeouts and a failing rate.
    let out = bin()
        .args(["batch", "--scenario", &scenario_path("pool.scn"), "--seeds", "3"])
        .args(["--out", dir.path().to_str().unwrap()])
        .args(["--max-duration", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("docked 0/3"));
}

#[test]
fn same_seed_reruns_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = bin()
            .args(["run", "--scenario", &scenario_path("sea.scn"), "--seed", "42"])
            .args(["--out", dir.path().to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.code().is_some());
    }
    let log_a = std::fs::read(dir_a.path().join("trajectory.csv")).unwrap();
    let log_b = std::fs::read(dir_b.path().join("trajectory.csv")).unwrap();
    assert_eq!(log_a, log_b, "trajectory logs must match byte for byte");
    let m_a = std::fs::read(dir_a.path().join("metrics.txt")).unwrap();
    let m_b = std::fs::read(dir_b.path().join("metrics.txt")).unwrap();
    assert_eq!(m_a, m_b);
}
