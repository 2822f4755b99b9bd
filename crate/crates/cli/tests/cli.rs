use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vlm-hawkes"))
}

fn config(name: &str) -> &'static Path {
    Box::leak(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).into_boxed_path())
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_weak_e1_is_satisfied_with_lhs_point_eight() {
    let out = run(&["check", s(config("e1_weak.json")), "--format", "json"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["lhs"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(report["verdict"], "satisfied");
}

#[test]
fn check_exit_codes() {
    assert_eq!(code(&run(&["check", s(config("e1_strong.json"))])), 2);
    let lattice = config("cascade_lattice.json");
    assert_eq!(code(&run(&["check", s(lattice), "--kmax", "1", "--gamma-override", "1"])), 3);
    assert_eq!(code(&run(&["check", s(lattice)])), 0);
}

#[test]
fn check_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    assert_eq!(code(&run(&["check", s(config("e1_weak.json")), "--out", s(&out)])), 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "check");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("Satisfied"));
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"model_kind\": \"saturation\",\n  \"neurons\": [ }\n").unwrap();
    let out = run(&["check", s(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn empty_window_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let args = ["simulate", s(config("e1_weak.json")), "--window", "0", "0", "--out", s(&out)];
    assert_eq!(code(&run(&args)), 0);
    let csv = fs::read_to_string(out.join("replica_00000.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1], "time,neuron,decision");
    assert_eq!(fs::read_to_string(out.join("replica_00000.jsonl")).unwrap(), "");
}

#[test]
fn same_seed_same_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let args = ["simulate", s(config("e1_weak.json")), "--window", "0", "20", "--seed", "42", "--out", s(out)];
        assert_eq!(code(&run(&args)), 0);
    }
    for f in ["replica_00000.csv", "replica_00000.jsonl"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn replicas_and_aggregate_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let args = [
        "simulate",
        s(config("e1_weak.json")),
        "--window",
        "0",
        "5",
        "--seed",
        "3",
        "--replicas",
        "100",
        "--out",
        s(&out),
    ];
    assert_eq!(code(&run(&args)), 0);
    let csvs: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    assert_eq!(csvs.len(), 100);
    let mut total = 0.0;
    for p in &csvs {
        let text = fs::read_to_string(p).unwrap();
        total += text.lines().skip(2).filter(|l| l.ends_with(",0,1")).count() as f64 / 5.0;
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let mean = summary["mean_rates"]["0"].as_f64().unwrap();
    assert!((mean - total / 100.0).abs() < 1e-12, "{mean} vs {}", total / 100.0);
    assert_eq!(summary["rates"].as_array().unwrap().len(), 100);
}

#[test]
fn unchecked_network_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let args = ["simulate", s(config("e1_strong.json")), "--window", "0", "1", "--out", s(&out)];
    assert_eq!(code(&run(&args)), 1);
    assert!(!out.exists());
}

#[test]
fn cap_errors_remove_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let args = [
        "simulate",
        s(config("e1_strong.json")),
        "--force",
        "--window",
        "0",
        "50",
        "--replicas",
        "4",
        "--max-sites",
        "2",
        "--out",
        s(&out),
    ];
    let res = run(&args);
    assert_eq!(code(&res), 1, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!out.exists());
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let weak = config("e1_weak.json");
    let perfect = dir.path().join("perfect");
    let fwd = dir.path().join("fwd");
    let args = ["simulate", s(weak), "--window", "0", "10", "--replicas", "300", "--seed", "5", "--out", s(&perfect)];
    assert_eq!(code(&run(&args)), 0);
    let args = ["simulate", s(weak), "--mode", "forward", "--window", "0", "5000", "--seed", "9", "--out", s(&fwd)];
    assert_eq!(code(&run(&args)), 0);
    let long = fwd.join("replica_00000.csv");
    let out = run(&["compare", s(&perfect), s(&long)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));

    // forward windows against another forward run
    let windows = dir.path().join("windows");
    let args = [
        "simulate",
        s(weak),
        "--mode",
        "forward",
        "--window",
        "0",
        "100",
        "--replicas",
        "40",
        "--seed",
        "11",
        "--out",
        s(&windows),
    ];
    assert_eq!(code(&run(&args)), 0);
    fs::remove_file(windows.join("summary.json")).ok();
    assert_eq!(code(&run(&["compare", s(&windows), s(&long)])), 0);

    let other = dir.path().join("other");
    let args =
        ["simulate", s(config("e1_strong.json")), "--mode", "forward", "--window", "0", "500", "--out", s(&other)];
    assert_eq!(code(&run(&args)), 0);
    assert_eq!(code(&run(&["compare", s(&perfect), s(&other.join("replica_00000.csv"))])), 1);
}

#[test]
fn compare_fails_on_different_dynamics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strong_drive.json");
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(config("e1_weak.json")).unwrap()).unwrap();
    let perfect = dir.path().join("perfect");
    let args =
        ["simulate", s(config("e1_weak.json")), "--window", "0", "10", "--replicas", "300", "--out", s(&perfect)];
    assert_eq!(code(&run(&args)), 0);
    // the forward file gets the hash of the weak config, so only the dynamics differ
    v["edges"][0]["w"] = serde_json::json!(8.0);
    fs::write(&cfg, serde_json::to_string(&v).unwrap()).unwrap();
    let fwd = dir.path().join("fwd");
    let args = ["simulate", s(&cfg), "--mode", "forward", "--window", "0", "3000", "--out", s(&fwd)];
    assert_eq!(code(&run(&args)), 0);
    let path = fwd.join("replica_00000.csv");
    let text = fs::read_to_string(&path).unwrap();
    let hash = |p: &Path| {
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("manifest.json")).unwrap()).unwrap();
        m["config_sha256"].as_str().unwrap().to_owned()
    };
    fs::write(&path, text.replace(&hash(&fwd), &hash(&perfect))).unwrap();
    assert_eq!(code(&run(&["compare", s(&perfect), s(&path)])), 2);
}

#[test]
fn clan_stats_reports_offspring() {
    let out = run(&["clan-stats", s(config("e1_weak.json")), "--replicas", "500", "--clamp"]);
    assert_eq!(code(&out), 0);
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(stats["offspring"]["mean"].as_f64().unwrap() < 0.2);
    assert_eq!(stats["replicas"], 500);
}
