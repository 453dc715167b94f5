use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evfuse"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn simulated(dir: &Path) {
    let out = run(dir, &["simulate", "--seed", "3", "--sequences", "120", "--plant", "--out", "sim"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_2_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["associate"][..],
        &["frobnicate"],
        &["associate", "--reports", "x.json", "--prior", "geometric:1.5"],
        &["stats", "uniformity", "--reports", "x.json", "--alpha"],
    ] {
        let out = run(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn missing_input_exits_1_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["associate", "--reports", "nowhere/reports.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nowhere/reports.json"), "{}", stderr(&out));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_input_exits_1_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "[{\"id\": 1").unwrap();
    let out = run(dir.path(), &["ingest", "--reports", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bad.json"), "{}", stderr(&out));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    for flag in ["--help", "--version"] {
        let out = run(dir.path(), &[flag]);
        assert_eq!(out.status.code(), Some(0));
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn simulate_writes_outputs_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    for name in ["reports.json", "sensors.json", "sequences.json", "ground_truth.json", "simulate.manifest.json"] {
        assert!(dir.path().join("sim").join(name).is_file(), "missing {name}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("sim/simulate.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["subcommand"], "simulate");
    // no temporary files are left behind
    assert!(std::fs::read_dir(dir.path().join("sim")).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn analyses_run_on_simulated_reports() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    let steps: &[&[&str]] = &[
        &["ingest", "--reports", "sim/reports.json", "--out", "ingest"],
        &["stats", "uniformity", "--reports", "sim/reports.json", "--from", "2026-01-01", "--to", "2026-01-01T06:00:00Z", "--out", "stats"],
        &["stats", "interarrival", "--reports", "sim/reports.json", "--out", "stats"],
        &["stats", "weekday", "--reports", "sim/reports.json", "--out", "stats"],
        &["cluster", "--reports", "sim/reports.json", "--space-k", "2", "--time-k", "2", "--out", "cluster"],
        &["density", "grid", "--reports", "sim/reports.json", "--out", "density"],
        &["density", "daily", "--reports", "sim/reports.json", "--out", "density"],
        &["learn", "--sequences", "sim/sequences.json", "--population", "30", "--generations", "5", "--out", "learn"],
        &["predict", "--rules", "learn/rules.json", "--sequences", "sim/sequences.json", "--out", "predict"],
    ];
    for args in steps {
        let out = run(dir.path(), args);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    }
    let manifests = ["stats/stats-uniformity.manifest.json", "cluster/cluster.manifest.json", "predict/predict.manifest.json"];
    for m in manifests {
        assert!(dir.path().join(m).is_file(), "missing {m}");
    }
    assert!(dir.path().join("predict/prediction_score.json").is_file());
}

#[test]
fn same_seed_gives_identical_association() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    for out_dir in ["a", "b"] {
        let out = run(dir.path(), &["associate", "--reports", "sim/reports.json", "--seed", "11", "--out", out_dir]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for name in ["partition.json", "membership.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
}
