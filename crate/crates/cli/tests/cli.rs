use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tceer_core::SimConfig;

fn tceer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tceer")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_outputs_and_reports_lifetime() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "short.cfg", "rounds = 300\nmalicious_count = 5\n");
    let out = tmp.path().join("out");
    let o = tceer(&["run", &cfg, out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["rounds.csv", "routes.txt", "trust.csv", "resolved-config.txt"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert!(stdout(&o).contains("rounds-to-50%-dead: not reached"));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(summary.trim_end(), stdout(&o).trim_end());

    let rounds = std::fs::read_to_string(out.join("rounds.csv")).unwrap();
    assert!(rounds.starts_with("round,alive,dead_pct,delivered,dropped_void,dropped_malicious,energy_j,blocked\n"));
    assert_eq!(rounds.lines().count(), 301);
    let trust = std::fs::read_to_string(out.join("trust.csv")).unwrap();
    assert!(trust.starts_with("round,observer,subject,dt,it,t,classification\n"));
}

#[test]
fn resolved_config_reloads_to_the_same_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "short.cfg", "rounds = 200\nseed = 3\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(tceer(&["run", &cfg, a.to_str().unwrap()]).status.success());
    let resolved = a.join("resolved-config.txt");
    assert!(tceer(&["run", resolved.to_str().unwrap(), b.to_str().unwrap()])
        .status
        .success());
    for f in ["rounds.csv", "routes.txt", "trust.csv", "resolved-config.txt"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let reloaded = SimConfig::from_file(&resolved).unwrap();
    assert_eq!(reloaded.seed, 3);
    assert_eq!(reloaded.rounds, 200);
}

#[test]
fn seed_override_changes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "short.cfg", "rounds = 200\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(tceer(&["run", &cfg, a.to_str().unwrap()]).status.success());
    assert!(tceer(&["run", &cfg, b.to_str().unwrap(), "seed=9"]).status.success());
    assert_ne!(
        std::fs::read(a.join("rounds.csv")).unwrap(),
        std::fs::read(b.join("rounds.csv")).unwrap()
    );
    let resolved = std::fs::read_to_string(b.join("resolved-config.txt")).unwrap();
    assert!(resolved.lines().any(|l| l.trim() == "seed = 9"));
}

#[test]
fn flags_and_positionals_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "short.cfg", "rounds = 50\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(tceer(&["run", &cfg, a.to_str().unwrap(), "seed=4"]).status.success());
    let o = tceer(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(a.join("routes.txt")).unwrap(),
        std::fs::read(b.join("routes.txt")).unwrap()
    );
}

#[test]
fn bad_weights_are_rejected_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "broken.cfg", "alpha = 0.5\nbeta = 0.7\n");
    let o = tceer(&["run", &cfg, tmp.path().join("out").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("alpha/beta"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_and_missing_files_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "typo.cfg", "sede = 4\n");
    let o = tceer(&["run", &cfg, tmp.path().join("out").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("sede"), "{}", stderr(&o));

    let o = tceer(&["run", tmp.path().join("nope.cfg").to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn unwritable_output_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = tceer(&["run", "--out", blocker.join("sub").to_str().unwrap(), "rounds=5"]);
    assert!(!o.status.success());
}

#[test]
fn compare_writes_one_row_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "short.cfg", "rounds = 100\nmalicious_count = 10\n");
    let out = tmp.path().join("cmp");
    let o = tceer(&["compare", &cfg, out.to_str().unwrap(), "--seeds", "1-4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, ["seed,tceer_r50,baseline_r50", "1,,", "2,,", "3,,", "4,,"]);
    // Nobody dies in 100 rounds, so every seed ties.
    assert!(stdout(&o).contains("tceer wins: 0, ties: 4, losses: 0 (of 4 seeds)"));
}

#[test]
fn trace_prints_each_packet() {
    let o = tceer(&["trace", "--source", "24", "--packets", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("0,delivered,24>"));
    assert_eq!(lines[1], "distinct routes: 1");
}

#[test]
fn trace_writes_its_report_when_given_an_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let o = tceer(&["trace", "--source", "24", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(out.join("trace.txt")).unwrap(), stdout(&o));
}

#[test]
fn trace_rejects_unusable_sources() {
    let o = tceer(&["trace", "--source", "50"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("50"), "{}", stderr(&o));

    let o = tceer(&["trace", "--source", "1", "e_initial=0"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("e_initial"), "{}", stderr(&o));
}

#[test]
fn void_scenario_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tceer(&[
        "run",
        scenario("void.cfg").to_str().unwrap(),
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let routes = std::fs::read_to_string(tmp.path().join("routes.txt")).unwrap();
    assert!(routes
        .lines()
        .all(|l| l.ends_with(",delivered,0>BS") || l.ends_with(",dropped_void,1")));
}
