//! Experiment drivers: training, Q-factor sweeps, post-LDPC BER, achievable
//! rate, EXIT measurement and degree optimization.

use crate::config::{EqualizerKind, ExperimentConfig};
use crate::dataset::{generate_dataset, Burst, Dataset};
use crate::error::{HarnessError, Result};
use crate::results::ResultRow;
use serde::Serialize;
use teq_core::exit::{
    combined_chart, fit_cubic, measure_detector_exit, optimize_degrees, tunnel_open, unit_grid, CombinedChart,
    CubicModel, ExitCurve, OptimizedCode, TUNNEL_DELTA,
};
use teq_core::ldpc::{bch_pass, construct_code, design_rate, BchThresholdModel, BpDecoder, DegreeDistribution};
use teq_core::neural::{
    decode_stream, train, turbo_decode, Interleaver, NetworkDetector, NeuralModel, PassStats, TrainHistory,
    TurboSchedule,
};
use teq_core::par::derive_seed;
use teq_core::rx::{ber_and_q, Decisions};
use teq_core::signal::{exact_llr_demap, BitFrame, SymbolFrame};
use teq_core::Exec;

pub const METRIC_PRE_FEC_BER: &str = "pre_fec_ber";
pub const METRIC_Q_DB: &str = "q_db";
pub const METRIC_TRAINING_FAILED: &str = "training_failed";
pub const METRIC_POST_BER: &str = "post_ldpc_ber";
pub const METRIC_POST_BER_PASS: &str = "post_ldpc_ber_pass";
pub const METRIC_BCH_PASS: &str = "bch_pass";
pub const METRIC_MEAN_BP: &str = "mean_bp_iterations";
pub const METRIC_SE: &str = "spectral_efficiency";
pub const METRIC_EXIT: &str = "exit_i_out";

/// Codewords decoded between checks of the stopping rule.
const SEGMENT_CODEWORDS: usize = 16;

#[derive(Debug, Clone)]
pub struct TrainedEqualizer {
    pub kind: EqualizerKind,
    pub model: NeuralModel,
    pub history: TrainHistory,
    pub seed: u64,
}

/// One launch power: its dataset and the network equalizers trained on it.
/// A failed training run is kept as its error message.
#[derive(Debug, Clone)]
pub struct PreparedPoint {
    pub dataset: Dataset,
    pub models: Vec<(EqualizerKind, std::result::Result<TrainedEqualizer, String>)>,
}

impl PreparedPoint {
    pub fn power(&self) -> f64 {
        self.dataset.launch_power_dbm
    }

    pub fn model(&self, kind: EqualizerKind) -> Option<&std::result::Result<TrainedEqualizer, String>> {
        self.models.iter().find(|(k, _)| *k == kind).map(|(_, m)| m)
    }
}

pub fn model_seed(cfg: &ExperimentConfig, power_dbm: f64, kind: EqualizerKind) -> u64 {
    derive_seed(cfg.seed, power_dbm.to_bits(), 16 + kind as u64)
}

pub fn train_equalizer(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    kind: EqualizerKind,
    exec: Exec,
) -> Result<TrainedEqualizer> {
    let mode = kind
        .loss_mode()
        .ok_or_else(|| HarnessError::InvalidConfig(format!("{} is not a network equalizer", kind.name())))?;
    let seed = model_seed(cfg, ds.launch_power_dbm, kind);
    let ws = ds.train.windows(ds.window)?;
    let (model, history) = train(&ws, &cfg.train_spec(mode, seed), exec)?;
    Ok(TrainedEqualizer {
        kind,
        model,
        history,
        seed,
    })
}

/// Generates the dataset at `power_dbm` and trains every network equalizer
/// in `kinds`. Numerical training failures are recorded, not returned.
pub fn prepare_point(cfg: &ExperimentConfig, power_dbm: f64, kinds: &[EqualizerKind], exec: Exec) -> Result<PreparedPoint> {
    let dataset = generate_dataset(cfg, power_dbm, cfg.seed)?;
    let mut models = Vec::new();
    for &kind in kinds.iter().filter(|k| k.loss_mode().is_some()) {
        let m = match train_equalizer(cfg, &dataset, kind, exec) {
            Ok(m) => Ok(m),
            Err(HarnessError::Core(teq_core::Error::Numeric(msg))) => {
                log::warn!("{} training failed at {power_dbm} dBm: {msg}", kind.name());
                Err(msg)
            }
            Err(e) => return Err(e),
        };
        models.push((kind, m));
    }
    Ok(PreparedPoint { dataset, models })
}

/// [`prepare_point`] for every configured launch power, in parallel.
pub fn prepare_points(cfg: &ExperimentConfig, kinds: &[EqualizerKind], exec: Exec) -> Result<Vec<PreparedPoint>> {
    cfg.validate()?;
    exec.map_slice(&cfg.link.powers_dbm, |&p| prepare_point(cfg, p, kinds, exec))
        .into_iter()
        .collect()
}

fn model_for<'a>(pt: &'a PreparedPoint, kind: EqualizerKind) -> Result<std::result::Result<&'a TrainedEqualizer, &'a str>> {
    match pt.model(kind) {
        Some(Ok(m)) => Ok(Ok(m)),
        Some(Err(msg)) => Ok(Err(msg.as_str())),
        None => Err(HarnessError::InvalidConfig(format!(
            "{} was not trained for {} dBm",
            kind.name(),
            pt.power()
        ))),
    }
}

/// Bit LLRs of `kind` on a burst with zero a-priori input.
fn receiver_llrs(cfg: &ExperimentConfig, ds: &Dataset, burst: &Burst, model: Option<&NeuralModel>, exec: Exec) -> Result<Vec<f64>> {
    match model {
        None => Ok(exact_llr_demap(&burst.eq, &cfg.format()?, ds.noise_var)?),
        Some(m) => {
            let ws = burst.windows(ds.window)?;
            let det = NetworkDetector::new(&ws, m, exec)?;
            Ok(det.llrs(&vec![0.0; ws.bits().len()])?)
        }
    }
}

fn failed_row(cfg: &ExperimentConfig, pt: &PreparedPoint, kind: EqualizerKind) -> ResultRow {
    let seed = model_seed(cfg, pt.power(), kind);
    ResultRow::new(&cfg.digest(), pt.power(), kind.name(), METRIC_TRAINING_FAILED, 1.0, 0, seed)
}

/// Pre-FEC BER and Q factor on the test burst for each configured equalizer.
pub fn qfactor_rows(cfg: &ExperimentConfig, pt: &PreparedPoint, exec: Exec) -> Result<Vec<ResultRow>> {
    let digest = cfg.digest();
    let ds = &pt.dataset;
    let mut rows = Vec::new();
    for &kind in &cfg.equalizers {
        let (model, seed) = if kind == EqualizerKind::Le {
            (None, ds.seed)
        } else {
            match model_for(pt, kind)? {
                Ok(m) => (Some(&m.model), m.seed),
                Err(_) => {
                    rows.push(failed_row(cfg, pt, kind));
                    continue;
                }
            }
        };
        let llrs = receiver_llrs(cfg, ds, &ds.test, model, exec)?;
        let r = ber_and_q(Decisions::Llrs(&llrs), ds.test.bits.bits())?;
        rows.push(ResultRow::new(&digest, pt.power(), kind.name(), METRIC_PRE_FEC_BER, r.ber, r.count, seed));
        rows.push(ResultRow::new(&digest, pt.power(), kind.name(), METRIC_Q_DB, r.q_factor_db, r.count, seed));
    }
    Ok(rows)
}

pub fn run_qfactor_sweep(cfg: &ExperimentConfig, exec: Exec) -> Result<Vec<ResultRow>> {
    let points = prepare_points(cfg, &cfg.equalizers, exec)?;
    let mut rows = Vec::new();
    for pt in &points {
        rows.extend(qfactor_rows(cfg, pt, exec)?);
    }
    Ok(rows)
}

/// An LDPC code with its decoder and channel interleaver.
pub struct CodeUnderTest {
    pub dist: DegreeDistribution,
    pub decoder: BpDecoder,
    pub k: usize,
    pub n: usize,
    pub interleaver: Interleaver,
    /// Design rate, recorded as the row parameter for code-family rows.
    pub label: Option<f64>,
}

impl CodeUnderTest {
    pub fn build(cfg: &ExperimentConfig, dist: &DegreeDistribution, label: Option<f64>) -> Result<Self> {
        let n = cfg.code.n;
        let code = construct_code(dist, n, cfg.code.seed)?;
        Ok(Self {
            dist: dist.clone(),
            decoder: BpDecoder::new(&code),
            k: code.k(),
            n,
            interleaver: Interleaver::new(n, cfg.code.interleaver_seed),
            label,
        })
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn slice_burst(b: &Burst, from: usize, to: usize) -> Result<Burst> {
    let bps = b.bits.bits_per_symbol();
    let sym = |s: &SymbolFrame| SymbolFrame::new(s.x[from..to].to_vec(), s.y[from..to].to_vec(), s.baud);
    Ok(Burst {
        bits: BitFrame::new(b.bits.bits()[from * bps..to * bps].to_vec(), bps)?,
        tx: sym(&b.tx)?,
        eq: sym(&b.eq)?,
    })
}

/// Splits the test burst into segments holding a whole number of codewords.
/// Data past the last whole segment group is dropped.
fn segments(test: &Burst, n: usize) -> Result<Vec<Burst>> {
    let bps = test.bits.bits_per_symbol();
    let group_bits = n / gcd(n, bps) * bps;
    let group_syms = group_bits / bps;
    let cw_per_group = group_bits / n;
    let groups_per_seg = SEGMENT_CODEWORDS.div_ceil(cw_per_group);
    let total_groups = test.tx.len() / group_syms;
    if total_groups == 0 {
        return Err(HarnessError::InvalidConfig(format!(
            "test burst of {} symbols holds no whole codeword group of {group_syms} symbols",
            test.tx.len()
        )));
    }
    let mut out = Vec::new();
    let mut g = 0;
    while g < total_groups {
        let end = (g + groups_per_seg).min(total_groups);
        out.push(slice_burst(test, g * group_syms, end * group_syms)?);
        g = end;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    errors: usize,
    info_bits: usize,
    frames: usize,
    frame_errors: usize,
    bp_sum: f64,
}

impl Tally {
    fn add(&mut self, s: &PassStats) {
        self.errors += s.bit_errors;
        self.info_bits += s.info_bits;
        self.frames += s.frames;
        self.frame_errors += s.frame_errors;
        self.bp_sum += s.mean_bp_iterations * s.frames as f64;
    }

    fn ber(&self) -> f64 {
        self.errors as f64 / self.info_bits.max(1) as f64
    }
}

/// Decodes segments until the final pass has `min_errors` bit errors or
/// the information-bit budget is spent. Returns one tally per pass.
fn monte_carlo(
    cfg: &ExperimentConfig,
    segs: &[Burst],
    mut pass: impl FnMut(&Burst) -> Result<Vec<PassStats>>,
) -> Result<Vec<Tally>> {
    let mut tallies: Vec<Tally> = Vec::new();
    for seg in segs {
        let stats = pass(seg)?;
        if tallies.is_empty() {
            tallies = vec![Tally::default(); stats.len()];
        }
        for (t, s) in tallies.iter_mut().zip(&stats) {
            t.add(s);
        }
        let last = tallies.last().expect("at least one pass");
        if last.errors >= cfg.code.min_errors || last.info_bits >= cfg.code.max_info_bits {
            break;
        }
    }
    Ok(tallies)
}

/// Post-LDPC BER rows for each configured equalizer on one code. The
/// turbo receiver also reports every outer pass; pass 1 runs with zero
/// a-priori input.
pub fn ber_rows(cfg: &ExperimentConfig, pt: &PreparedPoint, code: &CodeUnderTest, exec: Exec) -> Result<Vec<ResultRow>> {
    let digest = cfg.digest();
    let ds = &pt.dataset;
    let segs = segments(&ds.test, code.n)?;
    let bp = cfg.code.bp_iterations;
    let mut rows = Vec::new();
    for &kind in &cfg.equalizers {
        let (model, seed) = if kind == EqualizerKind::Le {
            (None, ds.seed)
        } else {
            match model_for(pt, kind)? {
                Ok(m) => (Some(&m.model), m.seed),
                Err(_) => {
                    rows.push(failed_row(cfg, pt, kind));
                    continue;
                }
            }
        };
        let turbo = kind == EqualizerKind::DnnTeq;
        let tallies = monte_carlo(cfg, &segs, |seg| {
            if let (true, Some(m)) = (turbo, model) {
                let ws = seg.windows(ds.window)?;
                let det = NetworkDetector::new(&ws, m, exec)?;
                let schedule = TurboSchedule {
                    outer_iterations: cfg.code.outer_iterations,
                    bp_iterations: bp,
                    feedback_scale: cfg.code.feedback_scale,
                };
                Ok(turbo_decode(&det, &code.decoder, code.k, &code.interleaver, schedule, exec)?.passes)
            } else {
                let llrs = receiver_llrs(cfg, ds, seg, model, exec)?;
                let d = decode_stream(&llrs, seg.bits.bits(), &code.decoder, code.k, &code.interleaver, bp, exec)?;
                Ok(vec![d.stats])
            }
        })?;
        let row = |metric: &str, value: f64, t: &Tally| {
            let r = ResultRow::new(&digest, pt.power(), kind.name(), metric, value, t.info_bits as u64, seed).with_bp(bp);
            match code.label {
                Some(l) => r.with_param(l),
                None => r,
            }
        };
        if turbo && code.label.is_none() {
            for (i, t) in tallies.iter().enumerate() {
                let r = ResultRow::new(&digest, pt.power(), kind.name(), METRIC_POST_BER_PASS, t.ber(), t.info_bits as u64, seed)
                    .with_bp(bp)
                    .with_param((i + 1) as f64);
                rows.push(r);
            }
        }
        let last = tallies.last().expect("at least one pass");
        rows.push(row(METRIC_POST_BER, last.ber(), last));
        rows.push(row(METRIC_BCH_PASS, if bch_pass(last.ber()) { 1.0 } else { 0.0 }, last));
        rows.push(row(METRIC_MEAN_BP, last.bp_sum / last.frames.max(1) as f64, last));
    }
    Ok(rows)
}

pub fn run_ber_experiment(cfg: &ExperimentConfig, exec: Exec) -> Result<Vec<ResultRow>> {
    let code = CodeUnderTest::build(cfg, &cfg.code.spec.distribution()?, None)?;
    let points = prepare_points(cfg, &cfg.equalizers, exec)?;
    let mut rows = Vec::new();
    for pt in &points {
        rows.extend(ber_rows(cfg, pt, &code, exec)?);
    }
    Ok(rows)
}

/// The code family for the achievable-rate experiment: the configured
/// variable side with each configured average check degree.
pub fn code_family(cfg: &ExperimentConfig) -> Result<Vec<CodeUnderTest>> {
    cfg.rate
        .check_degrees
        .iter()
        .map(|&dc| {
            let dist = DegreeDistribution::check_concentrated(cfg.rate.var.clone(), dc)?;
            let r = design_rate(&dist)?;
            CodeUnderTest::build(cfg, &dist, Some(r))
        })
        .collect()
}

/// Post-LDPC BER rows for every code of the family at every power.
pub fn run_code_family(cfg: &ExperimentConfig, exec: Exec) -> Result<Vec<ResultRow>> {
    let family = code_family(cfg)?;
    let points = prepare_points(cfg, &cfg.equalizers, exec)?;
    let mut rows = Vec::new();
    for pt in &points {
        for code in &family {
            rows.extend(ber_rows(cfg, pt, code, exec)?);
        }
    }
    Ok(rows)
}

/// Upper bound of the spectral efficiency for a code rate.
pub fn spectral_efficiency(cfg: &ExperimentConfig, ldpc_rate: f64) -> f64 {
    let m = cfg.modulation.m as f64;
    2.0 * m * ldpc_rate * BchThresholdModel::STANDARD.outer_rate * cfg.modulation.baud_gbd / cfg.modulation.spacing_ghz
}

/// Spectral efficiency per power and receiver from code-family BER rows:
/// the best rate whose post-LDPC BER passes the outer-code threshold, or 0.
pub fn achievable_rate(cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<Vec<ResultRow>> {
    let digest = cfg.digest();
    let mut out: Vec<ResultRow> = Vec::new();
    for r in rows.iter().filter(|r| r.metric == METRIC_POST_BER && r.param.is_some()) {
        if r.digest != digest {
            return Err(HarnessError::InvalidConfig(format!(
                "row digest {} does not match the configuration {digest}",
                r.digest
            )));
        }
        let rate = r.param.expect("filtered");
        let se = if bch_pass(r.value) { spectral_efficiency(cfg, rate) } else { 0.0 };
        let slot = out
            .iter_mut()
            .find(|o| o.launch_power_dbm == r.launch_power_dbm && o.receiver == r.receiver);
        match slot {
            Some(o) => {
                o.count += 1;
                if se > o.value {
                    o.value = se;
                    o.param = Some(rate);
                }
            }
            None => {
                let mut o = ResultRow::new(&digest, r.launch_power_dbm, &r.receiver, METRIC_SE, se, 1, r.seed);
                o.bp_iters = r.bp_iters;
                if se > 0.0 {
                    o.param = Some(rate);
                }
                out.push(o);
            }
        }
    }
    Ok(out)
}

/// A measured detector curve with its cubic model.
#[derive(Debug, Clone, Serialize)]
pub struct ExitMeasurement {
    pub curve: ExitCurve,
    pub cubic: CubicModel,
    pub gain: f64,
    pub rows: Vec<ResultRow>,
}

pub fn exit_seed(cfg: &ExperimentConfig, power_dbm: f64) -> u64 {
    derive_seed(cfg.seed, power_dbm.to_bits(), 3)
}

/// EXIT curve of the trained TEQ network on the test burst of `pt`.
pub fn measure_exit(cfg: &ExperimentConfig, pt: &PreparedPoint, exec: Exec) -> Result<ExitMeasurement> {
    let m = match model_for(pt, EqualizerKind::DnnTeq)? {
        Ok(m) => m,
        Err(msg) => return Err(HarnessError::Core(teq_core::Error::Numeric(msg.to_string()))),
    };
    let ds = &pt.dataset;
    let ws = ds.test.windows(ds.window)?;
    let det = NetworkDetector::new(&ws, &m.model, exec)?;
    let seed = exit_seed(cfg, pt.power());
    let mut curve = measure_detector_exit(&det, &unit_grid(cfg.exit.grid_points), seed, exec, "dnn_teq")?;
    curve.launch_power_dbm = Some(pt.power());
    let cubic = fit_cubic(&curve)?;
    let pts = curve.points();
    let gain = pts[pts.len() - 1].i_out - pts[0].i_out;
    let digest = cfg.digest();
    let mut rows: Vec<ResultRow> = pts
        .iter()
        .map(|p| {
            ResultRow::new(&digest, pt.power(), "dnn_teq", METRIC_EXIT, p.i_out, p.n_samples as u64, p.seed).with_param(p.i_in)
        })
        .collect();
    let n = pts.len() as u64;
    rows.push(ResultRow::new(&digest, pt.power(), "dnn_teq", "exit_gain", gain, n, seed));
    rows.push(ResultRow::new(&digest, pt.power(), "dnn_teq", "cubic_max_residual", cubic.max_residual, n, seed));
    Ok(ExitMeasurement { curve, cubic, gain, rows })
}

/// Combined chart of a detector model with a code.
pub fn chart_for(cubic: &CubicModel, dist: &DegreeDistribution, grid_points: usize, power: f64) -> Result<(CombinedChart, bool)> {
    let det = |x: f64| cubic.eval_clamped(x);
    let chart = combined_chart(&det, dist, grid_points, Some(power))?;
    let open = tunnel_open(&chart, TUNNEL_DELTA);
    Ok((chart, open))
}

#[derive(Debug, Clone, Serialize)]
pub struct CodeDesign {
    pub optimized: OptimizedCode,
    /// Tunnel check of the optimized distribution against the cubic model.
    pub reverified: bool,
    pub rows: Vec<ResultRow>,
}

/// Degree optimization against a measured detector model. The configured
/// code's variable side is the baseline unless the optimizer names one.
pub fn optimize_code(cfg: &ExperimentConfig, m: &ExitMeasurement, exec: Exec) -> Result<CodeDesign> {
    let mut spec = cfg.optimizer.clone();
    if spec.baseline.is_none() {
        spec.baseline = Some(cfg.code.spec.distribution()?.var_degrees);
    }
    let cubic = m.cubic;
    let det = move |x: f64| cubic.eval_clamped(x);
    let optimized = optimize_degrees(&det, &spec, exec)?;
    let power = m.curve.launch_power_dbm.unwrap_or(f64::NAN);
    let (_, reverified) = chart_for(&m.cubic, &optimized.dist, spec.grid_points, power)?;
    let digest = cfg.digest();
    let seed = exit_seed(cfg, power);
    let count = optimized.candidates_evaluated as u64;
    let mut rows = vec![
        ResultRow::new(&digest, power, "dnn_teq", "optimized_rate", optimized.rate, count, seed),
        ResultRow::new(&digest, power, "dnn_teq", "tunnel_open", if reverified { 1.0 } else { 0.0 }, count, seed),
    ];
    if let Some(b) = optimized.baseline_rate {
        rows.push(ResultRow::new(&digest, power, "dnn_teq", "baseline_rate", b, count, seed));
    }
    Ok(CodeDesign {
        optimized,
        reverified,
        rows,
    })
}
