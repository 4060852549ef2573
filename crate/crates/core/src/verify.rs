//! Fast oracle suite: analytic or brute-force references for the numerical
//! kernels, small enough to run in a few seconds from the CLI.

use crate::error::Result;
use crate::exit::{j_function, j_inverse, mi_from_llrs, synthesize_apr, AprSynthSpec};
use crate::fiber::{ssfm_span, FiberSpanConfig, SsfmSettings};
use crate::ldpc::{bch_pass, construct_code, BpDecoder, DegreeDistribution};
use crate::neural::{gradient_check, random_apr_block, LossMode, NeuralModel, Topology, WindowSet};
use crate::signal::{exact_llr_demap, gray_map, rrc_shape, BitFrame, DualPolWaveform, ModFormat, SymbolFrame};
use crate::units::dbm_to_watts;
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("design_rates", design_rates),
    ("bch_threshold", bch_threshold),
    ("qpsk_convention", qpsk_convention),
    ("qam16_energy_and_gray", qam16_energy_and_gray),
    ("demapper_brute_force", demapper_brute_force),
    ("j_roundtrip", j_roundtrip),
    ("apr_mutual_information", apr_mutual_information),
    ("ssfm_linear_limit", ssfm_linear_limit),
    ("ssfm_nonlinear_phase", ssfm_nonlinear_phase),
    ("ssfm_energy", ssfm_energy),
    ("bp_strong_llrs", bp_strong_llrs),
    ("gradient_check", gradient_small),
];

/// Names of all checks, in execution order.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

fn run(name: &str, f: Check) -> CheckResult {
    let (pass, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, e.to_string()),
    };
    CheckResult {
        name: name.to_string(),
        pass,
        detail,
    }
}

pub fn run_all() -> Vec<CheckResult> {
    CHECKS.iter().map(|(name, f)| run(name, *f)).collect()
}

/// Runs one check by name.
pub fn run_check(name: &str) -> Option<CheckResult> {
    CHECKS.iter().find(|(n, _)| *n == name).map(|(n, f)| run(n, *f))
}

fn design_rates() -> Result<(bool, String)> {
    let cases = [
        (DegreeDistribution::dvbs2_r9_10(), Ratio::new(9, 10)),
        (DegreeDistribution::dvbs2_r5_6(), Ratio::new(5, 6)),
        (DegreeDistribution::regular(3, 6)?, Ratio::new(1, 2)),
    ];
    let got: Vec<_> = cases.iter().map(|(d, _)| d.design_rate_exact()).collect();
    let ok = cases.iter().zip(&got).all(|((_, want), g)| *g == Some(*want));
    Ok((ok, format!("{got:?}")))
}

fn bch_threshold() -> Result<(bool, String)> {
    let ok = bch_pass(5e-5) && bch_pass(0.0) && !bch_pass(5.01e-5) && !bch_pass(f64::NAN);
    Ok((ok, "pass iff BER <= 5e-5".into()))
}

fn qpsk_convention() -> Result<(bool, String)> {
    let f = ModFormat::qpsk();
    let s = gray_map(&BitFrame::new(vec![0, 0, 1, 1], 4)?, &f, 1.0)?;
    let h = 0.5f64.sqrt();
    let ok = (s.x[0] - Complex64::new(h, h)).norm() < 1e-12 && (s.y[0] - Complex64::new(-h, -h)).norm() < 1e-12;
    Ok((ok, format!("x = {}, y = {}", s.x[0], s.y[0])))
}

fn qam16_energy_and_gray() -> Result<(bool, String)> {
    let f = ModFormat::qam16();
    let e = f.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
    let dmin = f.min_distance();
    let mut bad = 0;
    let mut pairs = 0;
    for a in 0..16 {
        for b in a + 1..16 {
            if ((f.point(a) - f.point(b)).norm() - dmin).abs() < 1e-9 {
                pairs += 1;
                if (a ^ b).count_ones() != 1 {
                    bad += 1;
                }
            }
        }
    }
    Ok(((e - 1.0).abs() < 1e-12 && pairs == 24 && bad == 0, format!("energy {e}, {pairs} adjacent pairs, {bad} violations")))
}

fn demapper_brute_force() -> Result<(bool, String)> {
    let f = ModFormat::qam16();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 200;
    let mut draw = || Complex64::new(rng.random_range(-1.3..1.3), rng.random_range(-1.3..1.3));
    let x: Vec<Complex64> = (0..n).map(|_| draw()).collect();
    let y: Vec<Complex64> = (0..n).map(|_| draw()).collect();
    let nv = 0.3;
    let llrs = exact_llr_demap(&SymbolFrame::new(x.clone(), y.clone(), 1.0)?, &f, nv)?;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for (p, r) in [x[i], y[i]].into_iter().enumerate() {
            for k in 0..f.m() {
                let (mut num, mut den) = (0.0, 0.0);
                for l in 0..f.order() {
                    let w = (-(r - f.point(l)).norm_sqr() / nv).exp();
                    if f.label_bit(l, k) == 0 {
                        num += w;
                    } else {
                        den += w;
                    }
                }
                let want = (num / den).ln();
                worst = worst.max((llrs[i * 2 * f.m() + p * f.m() + k] - want).abs());
            }
        }
    }
    Ok((worst < 1e-9, format!("max deviation {worst:.2e}")))
}

fn j_roundtrip() -> Result<(bool, String)> {
    let worst = (1..100)
        .map(|i| {
            let x = i as f64 / 100.0;
            (j_function(j_inverse(x)) - x).abs()
        })
        .fold(0.0, f64::max);
    Ok((worst < 1e-3, format!("max |J(J^-1(I)) - I| = {worst:.2e}")))
}

fn apr_mutual_information() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bits: Vec<u8> = (0..100_000).map(|_| rng.random_range(0..2)).collect();
    let mut worst: f64 = 0.0;
    for (j, i_in) in [0.1, 0.3, 0.5, 0.7, 0.9].into_iter().enumerate() {
        let llr = synthesize_apr(&bits, &AprSynthSpec { i_in, seed: 100 + j as u64 })?;
        worst = worst.max((mi_from_llrs(&llr, &bits)? - i_in).abs());
    }
    Ok((worst < 0.01, format!("max |I_hat - I_in| = {worst:.4}")))
}

fn qam_wave(seed: u64, symbols: usize, power_dbm: f64) -> Result<DualPolWaveform> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..symbols * 8).map(|_| rng.random_range(0..2)).collect();
    let s = gray_map(&BitFrame::new(bits, 8)?, &ModFormat::qam16(), 34e9)?;
    let mut w = rrc_shape(&s, 0.1, 4, None)?;
    let p = w.power();
    w.scale((dbm_to_watts(power_dbm) / p).sqrt());
    Ok(w)
}

/// Direct-DFT evaluation of `exp(j β₂/2 ω² L − αL/2)` applied to `x`.
pub fn analytic_linear_span(x: &[Complex64], fs: f64, beta2: f64, alpha_per_m: f64, len_m: f64) -> Vec<Complex64> {
    let n = x.len();
    let twiddle: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64)).collect();
    let spec: Vec<Complex64> = (0..n)
        .map(|k| {
            let s: Complex64 = x.iter().enumerate().map(|(t, v)| v * twiddle[(k * t) % n]).sum();
            let f = if k < n / 2 { k as f64 } else { k as f64 - n as f64 } * fs / n as f64;
            let w = 2.0 * PI * f;
            s * Complex64::from_polar((-alpha_per_m * len_m / 2.0).exp(), beta2 / 2.0 * w * w * len_m)
        })
        .collect();
    (0..n)
        .map(|t| spec.iter().enumerate().map(|(k, v)| v * twiddle[(k * t) % n].conj()).sum::<Complex64>() / n as f64)
        .collect()
}

fn ssfm_linear_limit() -> Result<(bool, String)> {
    let w = qam_wave(1, 256, 0.0)?;
    let cfg = FiberSpanConfig {
        gamma_per_w_km: 0.0,
        ..FiberSpanConfig::nzdsf_80km()
    };
    let (out, _) = ssfm_span(&w, &cfg, &SsfmSettings::Fixed { step_km: 1.0 })?;
    let want = DualPolWaveform {
        x: analytic_linear_span(&w.x, w.fs, cfg.beta2(), cfg.alpha_per_m(), 80e3),
        y: analytic_linear_span(&w.y, w.fs, cfg.beta2(), cfg.alpha_per_m(), 80e3),
        fs: w.fs,
        f_center_offset: 0.0,
    };
    let d = out.max_relative_diff(&want);
    Ok((d < 1e-6, format!("max relative error {d:.2e}")))
}

fn ssfm_nonlinear_phase() -> Result<(bool, String)> {
    let p = dbm_to_watts(3.0);
    let a = (p / 2.0).sqrt();
    let x = vec![Complex64::new(a, 0.0); 128];
    let w = DualPolWaveform::new(x.clone(), x, 136e9)?;
    let cfg = FiberSpanConfig {
        dispersion_ps_nm_km: 0.0,
        alpha_db_km: 0.0,
        ..FiberSpanConfig::nzdsf_80km()
    };
    let (out, _) = ssfm_span(&w, &cfg, &SsfmSettings::Fixed { step_km: 2.0 })?;
    let want = 8.0 / 9.0 * cfg.gamma_per_w_km * 1e-3 * p * 80e3;
    let worst = out.x.iter().chain(&out.y).map(|v| (v.arg() - want).abs()).fold(0.0, f64::max);
    Ok((worst < 1e-6, format!("phase error {worst:.2e} rad of {want:.4}")))
}

fn ssfm_energy() -> Result<(bool, String)> {
    let w = qam_wave(2, 512, 4.0)?;
    let lossless = FiberSpanConfig {
        alpha_db_km: 0.0,
        ..FiberSpanConfig::nzdsf_80km()
    };
    let st = SsfmSettings::default();
    let (out, _) = ssfm_span(&w, &lossless, &st)?;
    let e = (out.energy() - w.energy()).abs() / w.energy();
    let (fine, _) = ssfm_span(&w, &lossless, &st.refined())?;
    let diff: f64 = out.x.iter().zip(&fine.x).chain(out.y.iter().zip(&fine.y)).map(|(p, q)| (p - q).norm_sqr()).sum();
    let h = (diff / fine.energy()).sqrt();
    Ok((e < 1e-6 && h < 1e-4, format!("energy drift {e:.2e}, step-halving change {h:.2e}")))
}

fn bp_strong_llrs() -> Result<(bool, String)> {
    let code = construct_code(&DegreeDistribution::regular(3, 6)?, 480, 3)?;
    let dec = BpDecoder::new(&code);
    let mut ch = vec![6.0; 480];
    for i in [3, 77, 150, 301, 444] {
        ch[i] = -1.5;
    }
    let out = dec.decode(&ch, None, 50)?;
    let ok = out.syndrome_ok && out.hard.iter().all(|&b| b == 0);
    Ok((ok, format!("{} iterations", out.iterations)))
}

fn gradient_small() -> Result<(bool, String)> {
    let fmt = ModFormat::qpsk();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bits: Vec<u8> = (0..40 * 4).map(|_| rng.random_range(0..2)).collect();
    let frame = BitFrame::new(bits, 4)?;
    let mut sym = gray_map(&frame, &fmt, 1.0)?;
    let noise = Normal::new(0.0, 0.2).unwrap();
    for v in sym.x.iter_mut().chain(sym.y.iter_mut()) {
        *v += Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng));
    }
    let ws = WindowSet::new(&sym, &frame, 3)?;
    let rows: Vec<usize> = (0..16).collect();
    let apr = random_apr_block(&ws, &rows, &mut rng);
    let x = ws.batch_with_apr(&rows, Some(&apr))?;
    let mut worst: f64 = 0.0;
    for mode in [LossMode::BceMultilabel, LossMode::NbSoftmax, LossMode::TeqMinmax] {
        let topo = Topology {
            window: 3,
            bits_per_symbol: 4,
            width: 8,
            blocks: 2,
            head: mode.head(),
        };
        let model = NeuralModel::new(topo, 0.0, 4)?;
        let report = gradient_check(&model, x.view(), &ws.rows_bits(&rows), mode, 6, 17)?;
        worst = worst.max(report.worst());
    }
    Ok((worst < 1e-4, format!("worst relative error {worst:.2e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        for r in run_all() {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn dft_oracle_is_identity_without_dispersion_or_loss() {
        let x: Vec<Complex64> = (0..16).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let y = analytic_linear_span(&x, 1.0, 0.0, 0.0, 1.0);
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).norm() < 1e-12));
    }
}
