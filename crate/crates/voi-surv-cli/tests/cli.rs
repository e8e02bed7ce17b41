//! End-to-end tests of the voi-surv binary: every command, the exit-code
//! contract, and byte determinism across thread counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_voi-surv")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, edits: serde_json::Value) -> PathBuf {
    let mut base = serde_json::json!({
        "families": ["weibull", "gamma", "lognormal", "loglogistic"],
        "generator": {
            "new": {
                "weibull_shape": 1.1, "weibull_scale": 70.0,
                "gamma_shape": 1.8, "gamma_rate": 0.04, "n": 200
            },
            "standard": {
                "weibull_shape": 1.1, "weibull_scale": 50.0,
                "gamma_shape": 1.8, "gamma_rate": 0.04, "n": 200
            }
        },
        "t1": 12.0,
        "t2_grid": [24.0, 36.0],
        "t_h": 240.0,
        "k": 60,
        "j": 100,
        "chains": 2,
        "warmup": 100,
        "seed": 11,
        "mode": "single:weibull"
    });
    if let (Some(base), Some(edits)) = (base.as_object_mut(), edits.as_object()) {
        for (key, value) in edits {
            base.insert(key.clone(), value.clone());
        }
    }
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&base).unwrap()).unwrap();
    path
}

#[test]
fn generate_writes_one_row_per_participant_plus_header() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", serde_json::json!({}));
    let out = run(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("dataset.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 401);
    assert_eq!(lines[0], "id,arm,time,status");
    let new_rows = lines[1..]
        .iter()
        .filter(|l| l.split(',').nth(1) == Some("1"))
        .count();
    assert_eq!(new_rows, 200);
}

#[test]
fn generate_with_empty_arms_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        serde_json::json!({
            "generator": {
                "new": {
                    "weibull_shape": 1.1, "weibull_scale": 70.0,
                    "gamma_shape": 1.8, "gamma_rate": 0.04, "n": 0
                },
                "standard": {
                    "weibull_shape": 1.1, "weibull_scale": 50.0,
                    "gamma_shape": 1.8, "gamma_rate": 0.04, "n": 0
                }
            }
        }),
    );
    let out = run(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("dataset.csv")).unwrap();
    assert_eq!(text.trim(), "id,arm,time,status");
}

#[test]
fn fit_reports_every_family_and_only_requested_families() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", serde_json::json!({}));
    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap())
            .unwrap();
    assert_eq!(report["new"].as_array().unwrap().len(), 4);
    assert!(report["weights"]["incremental_nb"].as_f64().unwrap() > 0.0);

    let single = write_config(
        dir.path(),
        "single.json",
        serde_json::json!({"families": ["gamma"], "mode": "single:gamma"}),
    );
    let out = run(&[
        "fit",
        "--config",
        single.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap())
            .unwrap();
    let arms = report["new"].as_array().unwrap();
    assert_eq!(arms.len(), 1);
    assert_eq!(arms[0]["family"], "gamma");
}

#[test]
fn evsi_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        serde_json::json!({
            "enbs": {
                "trial_cost_rate": 5.0, "accrual_rate": 5.0,
                "horizon": 120.0, "incremental_nb": 10.57
            }
        }),
    );
    for threads in ["1", "5"] {
        let out = run(&[
            "evsi",
            "--config",
            config.to_str().unwrap(),
            "--method",
            "both",
            "--threads",
            threads,
            "--out",
            dir.path().join(threads).to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for artifact in ["results.json", "evsi_curve.csv", "enbs_curve.csv"] {
        let a = std::fs::read(dir.path().join("1").join(artifact)).unwrap();
        let b = std::fs::read(dir.path().join("5").join(artifact)).unwrap();
        assert_eq!(a, b, "{artifact} differs across thread counts");
    }
}

#[test]
fn evsi_seed_override_is_echoed_and_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", serde_json::json!({}));
    for seed in ["11", "12"] {
        let out = run(&[
            "evsi",
            "--config",
            config.to_str().unwrap(),
            "--method",
            "gam",
            "--seed",
            seed,
            "--out",
            dir.path().join(seed).to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |seed: &str| -> serde_json::Value {
        serde_json::from_str(
            &std::fs::read_to_string(dir.path().join(seed).join("results.json")).unwrap(),
        )
        .unwrap()
    };
    let a = read("11");
    let b = read("12");
    assert_eq!(a["seed"], 11);
    assert_eq!(b["seed"], 12);
    assert_eq!(b["config"]["seed"], 12);
    assert_ne!(
        a["evsi"][0]["gam"]["estimate"],
        b["evsi"][0]["gam"]["estimate"]
    );
}

#[test]
fn nested_budget_refusal_and_force_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        serde_json::json!({"mc_budget": 10, "t2_grid": [24.0]}),
    );
    let out = run(&[
        "evsi",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "mc",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));

    let out = run(&[
        "evsi",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "mc",
        "--force",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("results.json")).unwrap())
            .unwrap();
    assert!(results["evsi"][0]["mc"]["estimate"].is_f64());
    assert!(results["evsi"][0]["gam"].is_null());
}

#[test]
fn enbs_rebuilds_curves_and_honors_cost_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        serde_json::json!({
            "enbs": {
                "trial_cost_rate": 5.0, "accrual_rate": 5.0,
                "horizon": 120.0, "incremental_nb": 10.57
            }
        }),
    );
    let out = run(&[
        "evsi",
        "--config",
        config.to_str().unwrap(),
        "--method",
        "gam",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = dir.path().join("results.json");

    let out = run(&[
        "enbs",
        "--results",
        results.to_str().unwrap(),
        "--out",
        dir.path().join("re").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let original = std::fs::read(dir.path().join("enbs_curve.csv")).unwrap();
    let rebuilt = std::fs::read(dir.path().join("re").join("enbs_curve.csv")).unwrap();
    assert_eq!(original, rebuilt);

    // A prohibitive running cost makes both rules fire immediately.
    let costly = write_config(
        dir.path(),
        "costly.json",
        serde_json::json!({
            "enbs": {
                "trial_cost_rate": 1.0e9, "accrual_rate": 5.0,
                "horizon": 120.0, "incremental_nb": 10.57
            }
        }),
    );
    let out = run(&[
        "enbs",
        "--results",
        results.to_str().unwrap(),
        "--config",
        costly.to_str().unwrap(),
        "--out",
        dir.path().join("costly").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let crossings: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("costly").join("crossings.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(crossings["crossing_awr"].as_f64(), Some(0.0));
    assert_eq!(crossings["crossing_oir"].as_f64(), Some(0.0));
}

#[test]
fn bad_inputs_map_to_the_documented_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Unparseable config: exit 2 with a field-level message.
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"families\": []}").unwrap();
    let out = run(&[
        "generate",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Missing dataset file: exit 3.
    let config = write_config(dir.path(), "config.json", serde_json::json!({}));
    let out = run(&[
        "fit",
        "--config",
        config.to_str().unwrap(),
        "--dataset",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));

    // Results document that is not JSON: exit 3.
    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, "not json").unwrap();
    let out = run(&[
        "enbs",
        "--results",
        garbled.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
