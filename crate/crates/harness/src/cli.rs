//! The `teq` command line.

use crate::config::{EqualizerKind, ExperimentConfig};
use crate::dataset::generate_dataset;
use crate::error::{HarnessError, Result};
use crate::experiments::{
    achievable_rate, chart_for, ber_rows, measure_exit, optimize_code, prepare_point, prepare_points, qfactor_rows,
    run_code_family, CodeUnderTest,
};
use crate::results::{ResultRow, ResultSink, RunManifest, CSV_FORMAT_VERSION};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use teq_core::neural::save_checkpoint;
use teq_core::par::{current_threads, init_threads};
use teq_core::Exec;

#[derive(Debug, Parser)]
#[command(name = "teq", version, about = "DP-QAM fiber link simulation with neural turbo equalization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to the configuration's.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel mode.
    #[arg(long, env = "TEQ_THREADS")]
    pub threads: Option<usize>,
    /// Run every loop sequentially.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate and store the training and test bursts at every launch power.
    Dataset(Common),
    /// Train the configured network equalizers and save checkpoints.
    Train(Common),
    /// Measure the TEQ detector EXIT curve and its combined chart.
    ExitChart(Common),
    /// Post-LDPC BER per launch power and receiver.
    Ber(Common),
    /// Pre-FEC BER and Q factor per launch power and equalizer.
    Sweep(Common),
    /// Achievable spectral efficiency over the configured code family.
    Rate(Common),
    /// Degree-distribution optimization against the measured detector curve.
    OptimizeCode(Common),
    /// Run the analytic oracle checks.
    Verify {
        #[arg(long, env = "TEQ_THREADS")]
        threads: Option<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dataset(_) => "dataset",
            Command::Train(_) => "train",
            Command::ExitChart(_) => "exit-chart",
            Command::Ber(_) => "ber",
            Command::Sweep(_) => "sweep",
            Command::Rate(_) => "rate",
            Command::OptimizeCode(_) => "optimize-code",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 1 on a failed run or check, 2 on a usage error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok((summary, ok)) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let body = json!({ "error": e.report(), "command": cli.command.name() });
            println!("{}", serde_json::to_string_pretty(&body).expect("error serializes"));
            eprintln!("teq: {e}");
            1
        }
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
    exec: Exec,
}

fn setup(c: &Common) -> Result<Ctx> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let out = c.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    threads(c.threads)?;
    std::fs::create_dir_all(&out)?;
    let exec = if c.sequential { Exec::Sequential } else { Exec::default() };
    Ok(Ctx { cfg, out, exec })
}

fn threads(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        if n == 0 {
            return Err(HarnessError::InvalidConfig("thread count must be positive".into()));
        }
        init_threads(n)?;
    }
    Ok(())
}

/// Appends rows to `results.csv`, writes the run manifest and builds the
/// stdout summary.
fn finish(ctx: &Ctx, command: &str, rows: &[ResultRow], extra: Value) -> Result<Value> {
    let csv = ctx.out.join("results.csv");
    ResultSink::open(&csv)?.append(rows)?;
    let manifest = RunManifest {
        command: command.to_string(),
        config_digest: ctx.cfg.digest(),
        seed: ctx.cfg.seed,
        csv_format_version: CSV_FORMAT_VERSION,
        results_csv: csv.clone(),
        rows: rows.len(),
        threads: current_threads(),
        config: serde_json::to_value(&ctx.cfg)?,
        extra: extra.clone(),
    };
    let manifest_path = ctx.out.join(format!("{command}.manifest.json"));
    manifest.write(&manifest_path)?;
    Ok(json!({
        "command": command,
        "config_digest": manifest.config_digest,
        "seed": manifest.seed,
        "results_csv": csv,
        "manifest": manifest_path,
        "rows": rows.len(),
        "extra": extra,
    }))
}

fn power_tag(p: f64) -> String {
    format!("p{p:+.2}dBm")
}

fn run(cmd: &Command) -> Result<(Value, bool)> {
    let name = cmd.name();
    match cmd {
        Command::Verify { threads: t } => {
            threads(*t)?;
            let checks = teq_core::verify::run_all();
            let ok = checks.iter().all(|c| c.pass);
            Ok((json!({ "command": name, "pass": ok, "checks": checks }), ok))
        }
        Command::Dataset(c) => {
            let ctx = setup(c)?;
            dataset(&ctx, name).map(|v| (v, true))
        }
        Command::Train(c) => {
            let ctx = setup(c)?;
            train(&ctx, name).map(|v| (v, true))
        }
        Command::Sweep(c) => {
            let ctx = setup(c)?;
            let points = prepare_points(&ctx.cfg, &ctx.cfg.equalizers, ctx.exec)?;
            let mut rows = Vec::new();
            for pt in &points {
                rows.extend(qfactor_rows(&ctx.cfg, pt, ctx.exec)?);
            }
            finish(&ctx, name, &rows, json!({})).map(|v| (v, true))
        }
        Command::Ber(c) => {
            let ctx = setup(c)?;
            let code = CodeUnderTest::build(&ctx.cfg, &ctx.cfg.code.spec.distribution()?, None)?;
            let points = prepare_points(&ctx.cfg, &ctx.cfg.equalizers, ctx.exec)?;
            let mut rows = Vec::new();
            for pt in &points {
                rows.extend(ber_rows(&ctx.cfg, pt, &code, ctx.exec)?);
            }
            let extra = json!({ "code_rate": code.k as f64 / code.n as f64, "n": code.n });
            finish(&ctx, name, &rows, extra).map(|v| (v, true))
        }
        Command::Rate(c) => {
            let ctx = setup(c)?;
            let mut rows = run_code_family(&ctx.cfg, ctx.exec)?;
            let se = achievable_rate(&ctx.cfg, &rows)?;
            let extra = json!({ "spectral_efficiency": se.iter().map(|r| json!({
                "launch_power_dbm": r.launch_power_dbm,
                "receiver": r.receiver,
                "value": r.value,
                "code_rate": r.param,
            })).collect::<Vec<_>>() });
            rows.extend(se);
            finish(&ctx, name, &rows, extra).map(|v| (v, true))
        }
        Command::ExitChart(c) => {
            let ctx = setup(c)?;
            exit_chart(&ctx, name).map(|v| (v, true))
        }
        Command::OptimizeCode(c) => {
            let ctx = setup(c)?;
            let pt = prepare_point(&ctx.cfg, ctx.cfg.exit_power(), &[EqualizerKind::DnnTeq], ctx.exec)?;
            let m = measure_exit(&ctx.cfg, &pt, ctx.exec)?;
            let design = optimize_code(&ctx.cfg, &m, ctx.exec)?;
            let path = ctx.out.join("optimized_code.json");
            std::fs::write(&path, serde_json::to_string_pretty(&design.optimized)?)?;
            let mut rows = m.rows.clone();
            rows.extend(design.rows.iter().cloned());
            let extra = json!({
                "optimized": design.optimized,
                "tunnel_open": design.reverified,
                "cubic": m.cubic,
                "file": path,
            });
            finish(&ctx, name, &rows, extra).map(|v| (v, design.reverified))
        }
    }
}

fn dataset(ctx: &Ctx, name: &str) -> Result<Value> {
    let cfg = &ctx.cfg;
    let digest = cfg.digest();
    let made: Vec<Result<(f64, PathBuf, f64)>> = ctx.exec.map_slice(&cfg.link.powers_dbm, |&p| {
        let ds = generate_dataset(cfg, p, cfg.seed)?;
        let dir = ctx.out.join("datasets").join(power_tag(p));
        ds.save(&dir)?;
        Ok((p, dir, ds.test.mse()))
    });
    let mut rows = Vec::new();
    let mut dirs = Vec::new();
    for r in made {
        let (p, dir, mse) = r?;
        let count = cfg.data.test_symbols as u64;
        rows.push(ResultRow::new(&digest, p, "le", "post_le_mse", mse, count, cfg.seed));
        dirs.push(dir);
    }
    finish(ctx, name, &rows, json!({ "datasets": dirs }))
}

fn train(ctx: &Ctx, name: &str) -> Result<Value> {
    let cfg = &ctx.cfg;
    let digest = cfg.digest();
    let points = prepare_points(cfg, &cfg.equalizers, ctx.exec)?;
    let dir = ctx.out.join("models");
    std::fs::create_dir_all(&dir)?;
    let mut rows = Vec::new();
    let mut files = Vec::new();
    for pt in &points {
        for (kind, m) in &pt.models {
            match m {
                Ok(m) => {
                    let path = dir.join(format!("{}_{}.json", kind.name(), power_tag(pt.power())));
                    let hyper = json!({ "network": cfg.network, "config_digest": digest, "launch_power_dbm": pt.power() });
                    save_checkpoint(&m.model, &path, Some(m.seed), hyper)?;
                    let epochs = (m.history.epochs.len() - 1) as u64;
                    rows.push(ResultRow::new(&digest, pt.power(), kind.name(), "best_val_loss", m.history.best_val_loss(), epochs, m.seed));
                    files.push(path);
                }
                Err(_) => rows.push(ResultRow::new(&digest, pt.power(), kind.name(), "training_failed", 1.0, 0, cfg.seed)),
            }
        }
    }
    finish(ctx, name, &rows, json!({ "checkpoints": files }))
}

fn exit_chart(ctx: &Ctx, name: &str) -> Result<Value> {
    let cfg = &ctx.cfg;
    let pt = prepare_point(cfg, cfg.exit_power(), &[EqualizerKind::DnnTeq], ctx.exec)?;
    let m = measure_exit(cfg, &pt, ctx.exec)?;
    let curve_path = ctx.out.join("exit_curve.csv");
    m.curve.write_csv(std::fs::File::create(&curve_path)?)?;
    let dist = cfg.code.spec.distribution()?;
    let (chart, open) = chart_for(&m.cubic, &dist, cfg.optimizer.grid_points, pt.power())?;
    let chart_path = ctx.out.join("combined_chart.csv");
    write_chart(&chart_path, &chart)?;
    let extra = json!({
        "exit_curve": curve_path,
        "combined_chart": chart_path,
        "gain": m.gain,
        "cubic": m.cubic,
        "tunnel_open": open,
    });
    finish(ctx, name, &m.rows, extra)
}

fn write_chart(path: &Path, chart: &teq_core::exit::CombinedChart) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["i_a", "vnd", "cnd"])?;
    for ((x, v), c) in chart.grid.iter().zip(&chart.vnd).zip(&chart.cnd) {
        w.write_record([x.to_string(), v.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
