use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ebound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebound")).args(args).env_remove("EBOUND_OUT").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn fit(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("fit.json")).unwrap()).unwrap()
}

fn run_into(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["run"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", dir.to_str().unwrap()]);
    ebound(&all)
}

#[test]
fn list_names_every_experiment() {
    let o = ebound(&["list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["counterexample", "noncompact", "grouped-lasso", "lasso", "strongly-convex", "nuclear-regular", "custom"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn counterexample_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(dir.path(), &["counterexample"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["samples.csv", "loglog.csv", "fit.json", "summary.txt"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let v = fit(dir.path());
    let slope = v["slope"].as_f64().unwrap();
    assert!((1.9..=2.1).contains(&slope), "{slope}");
    assert_eq!(v["complementarity"]["holds"], false);
    let csv = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("radius,direction_id,d,r_prox,r_alt,F_val"));
}

#[test]
fn noncompact_ray_ratio_is_unbounded() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(dir.path(), &["noncompact", "--x-range", "-50..0", "--y", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    // rows run from x = -50 to x = 0; the ratio grows towards the far end
    let ratios: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            f[2] / f[3]
        })
        .collect();
    assert_eq!(ratios.len(), 51);
    assert!(ratios.windows(2).all(|w| w[0] > w[1]));
    assert!(ratios[0] > 1e10);
}

#[test]
fn grouped_lasso_seed_seven() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(dir.path(), &["grouped-lasso", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = fit(dir.path());
    assert_eq!(v["seed"], 7);
    let slope = v["slope"].as_f64().unwrap();
    assert!((0.85..=1.15).contains(&slope), "{slope}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(code(&run_into(d.path(), &["lasso", "--seed", "4"])), 0);
    }
    for f in ["samples.csv", "loglog.csv", "fit.json", "summary.txt"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&ebound(&["run", "no-such-experiment"])), 2);
    assert_eq!(code(&ebound(&["frobnicate"])), 2);
    assert_eq!(code(&ebound(&["run", "noncompact", "--x-range", "-5..3"])), 2);
    assert_eq!(code(&ebound(&["run", "custom"])), 2);
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, "{\"experiment\": \"counterexample\"}\n").unwrap();
    let o = ebound(&["validate", good.to_str().unwrap()]);
    assert_eq!(code(&o), 0);

    let bad = dir.path().join("bad.json");
    let text = r#"{
  "experiment": "custom",
  "problem": {
    "shape": 4,
    "loss": {"type": "least_squares", "targets": [1.0, -1.0]},
    "linear_map": {"dense": [[1, 0, 1, 0], [0, 1, 0, 1]]},
    "regularizer": {"type": "grouped_lasso", "groups": [[0, 1], [2, 3]],
                    "weights": [0.5, -1]}
  }
}"#;
    fs::write(&bad, text).unwrap();
    let o = ebound(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 8: problem.regularizer.weights[1]"), "{err}");
    assert!(err.contains("ω_J ≥ 0"), "{err}");

    let missing = dir.path().join("missing.json");
    fs::write(&missing, r#"{"experiment": "custom", "problem": {"shape": 2, "loss": {"type": "noncompact"}}}"#).unwrap();
    let o = ebound(&["validate", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8(o.stderr).unwrap().contains("regularizer"));
    assert_eq!(code(&ebound(&["run", "custom", "--config", bad.to_str().unwrap()])), 2);
}

#[test]
fn custom_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lasso.json");
    let out = dir.path().join("out");
    let text = format!(
        r#"{{
  "experiment": "custom",
  "problem": {{
    "shape": 3,
    "loss": {{"type": "least_squares", "targets": [1.0, -0.5]}},
    "linear_map": {{"dense": [[1, 0, 1], [0, 1, 1]]}},
    "regularizer": {{"type": "l1", "weight": 0.2}}
  }},
  "probe": {{"radii": {{"from": 1e-2, "to": 1e-4, "count": 5}}, "directions": 4, "seed": 3}},
  "solver": {{"step": {{"backtracking": {{"beta": 0.5, "t0": 1.0}}}}, "tol": 1e-12}},
  "output": {:?}
}}"#,
        out.to_str().unwrap()
    );
    fs::write(&cfg, text).unwrap();
    let o = ebound(&["run", "custom", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = fit(&out);
    assert_eq!(v["samples"], 20);
    assert_eq!(v["regularity"], "polyhedral");
}

#[test]
fn env_var_sets_output_root() {
    let root = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ebound"))
        .args(["run", "nuclear-regular"])
        .env("EBOUND_OUT", root.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(root.path().join("nuclear-regular").join("fit.json").is_file());
}
