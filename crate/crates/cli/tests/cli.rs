use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use incentive_cli::ExperimentConfig;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_incentive"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn as_vec(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn two_link_externality_reaches_optimal_tolls() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["run", "--config", config("two_link_externality.json").to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(out.path());
    assert_eq!(s["converged"], Value::Bool(true));
    let p = as_vec(&s["final_p"]);
    assert!((p[0] - 0.5).abs() <= 1e-3 && (p[1] - 0.5).abs() <= 1e-3, "{p:?}");
    for f in ["trajectory.csv", "plot.py", "analysis/verify_fixed_point.json", "analysis/routing_tolls.json"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    assert!(s["analyses"].as_array().unwrap().iter().all(|a| a["passed"] == Value::Bool(true)));
}

#[test]
fn gradient_baseline_stalls_at_inefficient_tolls() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["run", "--config", config("two_link_gradient_baseline.json").to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(out.path());
    assert!((s["final_social_cost"].as_f64().unwrap() - 1.0).abs() <= 1e-3);
    let p = as_vec(&s["final_p"]);
    assert!((p[0] - p[1]).abs() >= 1.0);
}

#[test]
fn invalid_configs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing_game.json");
    fs::write(&missing, r#"{"run": {"convergence_tol": 1e-6}}"#).unwrap();
    let o = run(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("game"));

    let malformed = dir.path().join("malformed.json");
    fs::write(&malformed, "{\n  \"game\": {\"kind\": \"builtin\", \"name\": \"pigou\"},\n  oops\n}").unwrap();
    let o = run(&["run", "--config", malformed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:3:"), "{}", String::from_utf8_lossy(&o.stderr));

    let unknown = dir.path().join("unknown_fixture.json");
    fs::write(&unknown, r#"{"game": {"kind": "builtin", "name": "sioux_falls"}}"#).unwrap();
    assert_eq!(run(&["run", "--config", unknown.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn singular_coupling_names_invertibility() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("singular.json");
    fs::write(
        &path,
        r#"{"game": {"kind": "aggregative", "q": [1, 1], "A": [[0, 1], [1, 0]], "alpha": 1, "zeta": [0, 0]},
            "analyses": [{"kind": "verify_fixed_point"}]}"#,
    )
    .unwrap();
    let o = run(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("M invertibility"));
}

#[test]
fn verify_shipped_suites() {
    for name in ["aggregative_pd.json", "counterexample.json"] {
        let out = tempfile::tempdir().unwrap();
        let o = run(&["verify", "--config", config(name).to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stdout));
        assert!(!out.path().join("summary.json").exists());
    }
}

#[test]
fn failed_checks_and_exhausted_budgets_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("short.json");
    fs::write(&path, r#"{"game": {"kind": "builtin", "name": "pigou"}, "run": {"max_iterations": 5}}"#).unwrap();
    let out = dir.path().join("short");
    let o = run(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(summary(&out)["converged"], Value::Bool(false));

    let path = dir.path().join("wrong.json");
    fs::write(
        &path,
        r#"{"game": {"kind": "builtin", "name": "two_link"},
            "analyses": [{"kind": "verify_fixed_point", "incentive": [0.6, 0.5]}]}"#,
    )
    .unwrap();
    let o = run(&["verify", "--config", path.to_str().unwrap(), "--out", dir.path().join("wrong").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lists_fixtures() {
    let o = run(&["list-fixtures"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["two_link", "pigou", "braess"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn identical_configs_give_identical_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seeded.json");
    fs::write(
        &path,
        r#"{"game": {"kind": "builtin", "name": "braess"}, "random_start": true,
            "run": {"seed": 42, "schedule": {"a": 0.55, "b": 0.75}, "rule": {"kind": "gradient"}}}"#,
    )
    .unwrap();
    let read = |sub: &str| {
        let out = dir.path().join(sub);
        let o = run(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out.join("trajectory.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn directory_fan_out() {
    let dir = tempfile::tempdir().unwrap();
    let configs = dir.path().join("configs");
    fs::create_dir(&configs).unwrap();
    for name in ["pigou_tolls.json", "braess_tolls.json", "two_link_gradient_baseline.json"] {
        fs::copy(config(name), configs.join(name)).unwrap();
    }
    let out = dir.path().join("out");
    let o = run(&["run", "--config", configs.to_str().unwrap(), "--jobs", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for stem in ["pigou_tolls", "braess_tolls", "two_link_gradient_baseline"] {
        assert_eq!(summary(&out.join(stem))["converged"], Value::Bool(true));
    }
}

#[test]
fn shipped_configs_round_trip() {
    for entry in fs::read_dir(config("")).unwrap() {
        let path = entry.unwrap().path();
        let first = ExperimentConfig::load(&path).unwrap();
        let text = first.to_json();
        let second = ExperimentConfig::from_json(&text, &path).unwrap();
        assert_eq!(second.to_json(), text, "{}", path.display());
    }
}
