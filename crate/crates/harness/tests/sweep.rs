use teq_core::Exec;
use teq_harness::config::ExperimentConfig;
use teq_harness::experiments::{run_qfactor_sweep, METRIC_Q_DB};

const SWEEP: &str = r#"{
  "modulation": {"m": 4},
  "link": {"spans": 16, "powers_dbm": [-8.0, -4.0, 0.0, 4.0],
           "ssfm": {"kind": "nonlinear_phase", "max_phase_rad": 0.005, "max_step_km": 4.0}},
  "data": {"train_symbols": 16384, "test_symbols": 16384},
  "equalizers": ["le", "dnn_bce"],
  "network": {"width": 32, "blocks": 2, "max_epochs": 40, "patience": 6, "learning_rate": 0.003}
}"#;

/// DP-16QAM over 16 spans: ASE-limited at low power, nonlinearity-limited
/// at high power.
#[test]
fn q_sweep_has_the_expected_shape() {
    let cfg = ExperimentConfig::from_json(SWEEP).unwrap();
    let rows = run_qfactor_sweep(&cfg, Exec::default()).unwrap();
    let q = |recv: &str| -> Vec<f64> {
        cfg.link
            .powers_dbm
            .iter()
            .map(|&p| {
                rows.iter()
                    .find(|r| r.metric == METRIC_Q_DB && r.receiver == recv && r.launch_power_dbm == p)
                    .unwrap()
                    .value
            })
            .collect()
    };
    let le = q("le");
    let dnn = q("dnn_bce");
    assert!((le[0] - dnn[0]).abs() < 0.2, "low-power Q: LE {} DNN {}", le[0], dnn[0]);
    assert!(dnn[3] >= le[3], "high-power Q: LE {} DNN {}", le[3], dnn[3]);
    for curve in [&le, &dnn] {
        let best = curve
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(best != 0 && best != curve.len() - 1, "{curve:?}");
    }
}
