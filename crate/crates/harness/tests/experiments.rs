use teq_core::Exec;
use teq_harness::config::{EqualizerKind, ExperimentConfig};
use teq_harness::dataset::{generate_dataset, Dataset};
use teq_harness::experiments::*;
use teq_harness::results::ResultRow;

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

fn small() -> ExperimentConfig {
    config(
        r#"{
        "modulation": {"m": 4},
        "link": {"spans": 2, "powers_dbm": [0.0], "ssfm": {"kind": "fixed", "step_km": 2.0}},
        "data": {"train_symbols": 1024, "test_symbols": 1500, "le_taps": 7}
    }"#,
    )
}

#[test]
fn dataset_is_reproducible_and_sized() {
    let cfg = small();
    let a = generate_dataset(&cfg, 0.0, 9).unwrap();
    let b = generate_dataset(&cfg, 0.0, 9).unwrap();
    assert_eq!(a.payload_bytes(), b.payload_bytes());
    assert_eq!(a.train.tx.len(), 1024);
    assert_eq!(a.test.tx.len(), 1500);
    assert_eq!(a.test.bits.len(), 1500 * 8);
    let c = generate_dataset(&cfg, 0.0, 10).unwrap();
    assert_ne!(a.payload_bytes(), c.payload_bytes());
}

#[test]
fn dataset_round_trips_and_loading_leaves_files_untouched() {
    let cfg = small();
    let ds = generate_dataset(&cfg, 0.0, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ds.save(dir.path()).unwrap();
    let before: Vec<Vec<u8>> = ["manifest.txt", "payload.bin"]
        .iter()
        .map(|f| std::fs::read(dir.path().join(f)).unwrap())
        .collect();
    let back = Dataset::load(dir.path()).unwrap();
    assert_eq!(back, ds);
    assert_eq!(back.config_digest, cfg.digest());
    let after: Vec<Vec<u8>> = ["manifest.txt", "payload.bin"]
        .iter()
        .map(|f| std::fs::read(dir.path().join(f)).unwrap())
        .collect();
    assert_eq!(before, after);
    let ws = back.test.windows(back.window).unwrap();
    assert_eq!(ws.len(), 1500);
}

#[test]
fn corrupt_dataset_is_rejected() {
    let ds = generate_dataset(&small(), 0.0, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ds.save(dir.path()).unwrap();
    let payload = std::fs::read(dir.path().join("payload.bin")).unwrap();
    std::fs::write(dir.path().join("payload.bin"), &payload[..payload.len() / 2]).unwrap();
    assert!(Dataset::load(dir.path()).is_err());
}

#[test]
fn distortion_grows_with_launch_power_on_a_long_link() {
    let cfg = config(
        r#"{
        "modulation": {"m": 4},
        "link": {"spans": 16, "powers_dbm": [-5.0, -1.0],
                 "ssfm": {"kind": "nonlinear_phase", "max_phase_rad": 0.005, "max_step_km": 4.0}},
        "data": {"train_symbols": 2048, "test_symbols": 2048}
    }"#,
    );
    let low = generate_dataset(&cfg, -5.0, 1).unwrap();
    let high = generate_dataset(&cfg, -1.0, 1).unwrap();
    // Both normalized to unit power, so a larger residual means more distortion.
    assert!(high.test.mse() > low.test.mse(), "{} vs {}", high.test.mse(), low.test.mse());
}

fn noiseless() -> ExperimentConfig {
    config(
        r#"{
        "modulation": {"m": 2},
        "link": {"spans": 1, "powers_dbm": [-10.0], "edfa_nf_db": null,
                 "ssfm": {"kind": "fixed", "step_km": 4.0}},
        "data": {"train_symbols": 2048, "test_symbols": 4800, "le_taps": 7},
        "equalizers": ["le", "dnn_bce", "dnn_teq"],
        "network": {"width": 16, "blocks": 1, "max_epochs": 20, "patience": 4, "batch_size": 64, "learning_rate": 0.005},
        "code": {"spec": {"kind": "rate5_6"}, "n": 1200, "bp_iterations": 4, "outer_iterations": 2},
        "rate": {"check_degrees": [10.0, 30.0]}
    }"#,
    )
}

#[test]
fn noiseless_link_decodes_without_errors() {
    let cfg = noiseless();
    let pt = prepare_point(&cfg, -10.0, &cfg.equalizers, Exec::default()).unwrap();
    let q = qfactor_rows(&cfg, &pt, Exec::default()).unwrap();
    for r in q.iter().filter(|r| r.metric == METRIC_PRE_FEC_BER) {
        assert_eq!(r.value, 0.0, "{} pre-FEC", r.receiver);
    }
    let code = CodeUnderTest::build(&cfg, &cfg.code.spec.distribution().unwrap(), None).unwrap();
    let rows = ber_rows(&cfg, &pt, &code, Exec::default()).unwrap();
    let post: Vec<&ResultRow> = rows.iter().filter(|r| r.metric == METRIC_POST_BER).collect();
    assert_eq!(post.len(), 3);
    for r in &post {
        assert_eq!(r.value, 0.0, "{}", r.receiver);
        assert_eq!(r.bp_iters, Some(4));
        // 4800 QPSK symbols carry 16 codewords; with no errors all are decoded.
        assert_eq!(r.count as usize, 16 * code.k);
    }
    let passes = rows.iter().filter(|r| r.metric == METRIC_POST_BER_PASS).count();
    assert_eq!(passes, 2);
    assert!(rows
        .iter()
        .filter(|r| r.metric == METRIC_BCH_PASS)
        .all(|r| r.value == 1.0));
}

#[test]
fn achievable_rate_uses_the_best_passing_code() {
    let cfg = noiseless();
    let d = cfg.digest();
    let row = |recv: &str, ber: f64, rate: f64| {
        ResultRow::new(&d, 1.0, recv, METRIC_POST_BER, ber, 1000, 1).with_param(rate)
    };
    let rows = vec![
        row("le", 0.0, 0.5),
        row("le", 1e-3, 0.8),
        row("dnn_teq", 0.0, 0.5),
        row("dnn_teq", 1e-5, 0.8),
        row("dnn_bce", 1e-2, 0.5),
    ];
    let se = achievable_rate(&cfg, &rows).unwrap();
    let get = |recv: &str| se.iter().find(|r| r.receiver == recv).unwrap();
    assert_eq!(get("le").value, spectral_efficiency(&cfg, 0.5));
    assert_eq!(get("dnn_teq").value, spectral_efficiency(&cfg, 0.8));
    assert_eq!(get("dnn_teq").param, Some(0.8));
    assert_eq!(get("dnn_bce").value, 0.0);
    let bound = 2.0 * cfg.modulation.m as f64 * 0.9922 * 34.0 / 37.4;
    assert!(se.iter().all(|r| r.value <= bound));
    // SE agrees with the outer-code threshold of its BER rows.
    for s in &se {
        if let Some(rate) = s.param {
            let src = rows.iter().find(|r| r.receiver == s.receiver && r.param == Some(rate)).unwrap();
            assert!(teq_core::ldpc::bch_pass(src.value));
        }
    }
    let mut foreign = rows.clone();
    foreign[0].digest = "0".repeat(64);
    assert!(achievable_rate(&cfg, &foreign).is_err());
}

#[test]
fn code_family_rows_feed_the_rate_computation() {
    let mut cfg = noiseless();
    cfg.equalizers = vec![EqualizerKind::Le];
    let rows = run_code_family(&cfg, Exec::default()).unwrap();
    let post: Vec<_> = rows.iter().filter(|r| r.metric == METRIC_POST_BER).collect();
    assert_eq!(post.len(), 2);
    assert!(post.iter().all(|r| r.param.is_some() && r.value == 0.0));
    let se = achievable_rate(&cfg, &rows).unwrap();
    assert_eq!(se.len(), 1);
    let best = post.iter().map(|r| r.param.unwrap()).fold(0.0, f64::max);
    assert_eq!(se[0].value, spectral_efficiency(&cfg, best));
    assert_eq!(se[0].count, 2);
}
