use std::process::Command;

fn teq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_teq"))
}

const TINY: &str = r#"{
  "modulation": {"m": 2},
  "link": {"spans": 1, "powers_dbm": [-2.0, 2.0], "ssfm": {"kind": "fixed", "step_km": 4.0}},
  "data": {"train_symbols": 1024, "test_symbols": 2400, "le_taps": 7},
  "equalizers": ["le", "dnn_bce"],
  "network": {"width": 8, "blocks": 1, "max_epochs": 2, "patience": 1, "batch_size": 64, "learning_rate": 0.005}
}"#;

#[test]
fn verify_passes_and_reports_json() {
    let out = teq().arg("verify").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), teq_core::verify::check_names().len());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = teq().args(["verify", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_config_gives_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"modulation": {"m": 3}, "link": {"spans": 1, "powers_dbm": [0.0]}}"#).unwrap();
    let out = teq().arg("sweep").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"]["kind"], "invalid_config");

    std::fs::write(&path, r#"{"modulation": {"m": 4}, "link": {"spans": 1, "powers_dbm": [0.0]}, "extra": 1}"#).unwrap();
    let out = teq().arg("ber").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"]["kind"], "invalid_config");
}

#[test]
fn sweep_emits_one_q_row_per_power_and_equalizer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    std::fs::write(&cfg, TINY).unwrap();
    let out_dir = dir.path().join("out");
    let out = teq()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = teq_harness::results::read_rows(&out_dir.join("results.csv")).unwrap();
    let q: Vec<_> = rows.iter().filter(|r| r.metric == "q_db").collect();
    assert_eq!(q.len(), 4);
    for p in [-2.0, 2.0] {
        for e in ["le", "dnn_bce"] {
            assert_eq!(q.iter().filter(|r| r.launch_power_dbm == p && r.receiver == e).count(), 1);
        }
    }
    assert!(rows.iter().all(|r| r.digest == summary["config_digest"]));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("sweep.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["rows"], rows.len());
    assert_eq!(manifest["csv_format_version"], 1);
}

#[test]
fn seed_flag_overrides_the_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    std::fs::write(&cfg, TINY).unwrap();
    let run = |seed: &str| {
        let out_dir = dir.path().join(format!("out{seed}"));
        let out = teq()
            .args(["dataset", "--seed", seed, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success());
        teq_harness::results::read_rows(&out_dir.join("results.csv")).unwrap()
    };
    let a = run("3");
    let b = run("4");
    assert!(a.iter().all(|r| r.seed == 3) && b.iter().all(|r| r.seed == 4));
    assert_ne!(a[0].value, b[0].value);
}
