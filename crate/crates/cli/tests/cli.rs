use std::path::PathBuf;
use std::process::{Command, Output};

fn esa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esa"))
        .args(args)
        .current_dir(workspace_root())
        .output()
        .expect("binary runs")
}

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bound_on_bundled_scenario() {
    let o = esa(&["bound", "--config", "scenarios/paper_fig1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o).lines().next().unwrap().to_string();
    let value: f64 = line.trim_start_matches("bound ").parse().unwrap();
    assert!((value - 2.03).abs() <= 0.05, "{line}");
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = esa(&["run"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("--config") && err.contains("Usage"), "{err}");
}

#[test]
fn run_writes_metrics_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let trace = dir.path().join("t.csv");
    let o = esa(&[
        "run", "--config", "scenarios/paper_fig1", "--policy", "esa", "--v", "50", "--horizon", "2000", "--seed", "7",
        "--out", out.to_str().unwrap(), "--trace", trace.to_str().unwrap(), "--trace-stride", "100",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "V,seed,policy,utility,backlog,energy_avg,drops,violations");
    assert!(lines[1].starts_with("50,7,esa,"));
    let t = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(t.lines().count(), 21);
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("m{i}.csv"))).collect();
    for p in &paths {
        let o = esa(&["run", "--config", "scenarios/paper_fig1.toml", "--policy", "mesa", "--v", "50", "--horizon", "3000", "--seed", "3", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
}

#[test]
fn sweep_writes_json_with_fits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = esa(&[
        "sweep", "--config", "scenarios/paper_fig1", "--v-list", "20,50", "--seeds", "1,2", "--horizon", "2000",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert!(v["fits"]["backlog_vs_v"]["r2"].is_number());
    assert!(stdout(&o).contains("backlog vs V"));
}

#[test]
fn validate_prints_derived_constants() {
    let o = esa(&["validate", "--config", "scenarios/paper_fig1", "--v", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("gamma = 7"), "{s}");
    assert!(s.contains("theta = [202.0"), "{s}");
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(workspace_root().join("scenarios/paper_fig1.toml"))
        .unwrap()
        .replace("r_max = 3.0", "r_max = -1.0");
    std::fs::write(&path, text).unwrap();
    let o = esa(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("params.r_max"), "{}", stderr(&o));
}

#[test]
fn invariant_violation_exits_with_2() {
    // A hand-set perturbation far below P_max lets a node spend from a nearly
    // empty battery, which the per-slot checks catch.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("theta.toml");
    let text = std::fs::read_to_string(workspace_root().join("scenarios/paper_fig1.toml"))
        .unwrap()
        .replace("v = 100.0", "v = 100.0\ntheta = [0.5, 0.5, 0.5, 0.5, 0.5, 0.5]");
    std::fs::write(&path, text).unwrap();
    let o = esa(&["run", "--config", path.to_str().unwrap(), "--horizon", "1000"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("warning: params.theta"), "{err}");
    assert!(err.contains("slot"), "{err}");
}

#[test]
fn check_model_passes_on_bundled_scenarios() {
    for cfg in ["scenarios/paper_fig1", "scenarios/fig1_interference"] {
        let o = esa(&["check-model", "--config", cfg]);
        assert_eq!(o.status.code(), Some(0), "{cfg}: {}", stdout(&o));
        assert!(stdout(&o).contains("rate properties: ok"));
    }
}

#[test]
fn bound_with_brute_force_on_toy() {
    let o = esa(&["bound", "--config", "scenarios/toy_two_node", "--grid-step", "0.001"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("grid brute force"), "{}", stdout(&o));
}
