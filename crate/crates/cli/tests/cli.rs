use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tdfinite"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_prints_the_fixed_point() {
    let cfg = configs().join("d1.json");
    let o = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "theta_star=1.0"), "{text}");
    assert!(text.lines().any(|l| l == "v_mu=1.5,0.5"), "{text}");
}

#[test]
fn missing_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"n": 2, "P": [[0.5, 0.5], [0.5, 0.5]], "R": [[1, 1], [0, 0]], "Phi": [[1], [1]]}"#)
        .unwrap();
    let o = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("gamma"), "{err}");
}

#[test]
fn missing_config_file_is_reported() {
    let o = run(&["run", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_on_a_small_suite() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify",
        "--instances",
        "10",
        "--draws",
        "20",
        "--seed",
        "5",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.contains(" PASS ")).count(), 15);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 15);
}

#[test]
fn unknown_check_name_is_rejected() {
    let o = run(&["verify", "--suite", "NoSuchCheck", "--instances", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_is_satisfied_and_reproducible() {
    let cfg = configs().join("t2a_d1.json");
    let report = |dir: &Path| {
        let o = run(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            dir.to_str().unwrap(),
            "--jobs",
            "2",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(dir.join("report.json")).unwrap()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = report(a.path());
    assert_eq!(first, report(b.path()));

    let json: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(json["bound_name"], "T2a");
    assert_eq!(json["satisfied"], true);
    let mean = json["empirical_mean"].as_f64().unwrap();

    let trials = std::fs::read_to_string(a.path().join("trials.csv")).unwrap();
    let values: Vec<f64> = trials
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 200);
    let recomputed = values.iter().sum::<f64>() / values.len() as f64;
    assert!((recomputed - mean).abs() < 1e-12);
    assert!(a.path().join("trial_0199.csv").exists());
}

#[test]
fn seed_override_changes_the_report() {
    let cfg = configs().join("t2a_d1.json");
    let mean = |seed: &str| {
        let o = run(&["run", "--config", cfg.to_str().unwrap(), "--seed", seed, "--format", "json"]);
        let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        json["empirical_mean"].as_f64().unwrap()
    };
    assert_ne!(mean("1"), mean("2"));
}

#[test]
fn bounds_preview_names_the_bound() {
    let cfg = configs().join("t4c_lambda.json");
    let o = run(&["bounds", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["bound_name"], "T4c");
    assert!(json["bound_value"].as_f64().unwrap() > 0.0);
}

#[test]
fn impossible_slope_expectation_exits_one() {
    let cfg = configs().join("t2a_d1.json");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--t-min",
        "400",
        "--t-max",
        "3200",
        "--points",
        "4",
        "--expect-slope",
        "5,6",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("slope="));
}

#[test]
fn robust_step_below_its_horizon_floor_is_rejected() {
    let cfg = configs().join("t2a_d1.json");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--t-min", "100", "--t-max", "800"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon"));
}
