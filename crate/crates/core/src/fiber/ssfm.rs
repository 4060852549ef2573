use super::{FiberSpanConfig, SsfmSettings};
use crate::dsp::{fft_frequencies, FftPair};
use crate::error::{Error, Result};
use crate::signal::DualPolWaveform;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Manakov nonlinearity factor for polarization-averaged propagation.
const MANAKOV: f64 = 8.0 / 9.0;

/// Integration bookkeeping returned alongside the field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SsfmStats {
    pub steps: usize,
}

fn angular_frequencies(n: usize, fs: f64) -> Vec<f64> {
    fft_frequencies(n, fs)
        .into_iter()
        .map(|f| 2.0 * PI * f)
        .collect()
}

fn check_finite(w: &DualPolWaveform) -> Result<()> {
    if w.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric("non-finite samples in waveform".into()))
    }
}

/// Spectrum-domain all-pass dispersion `exp(j β₂/2 ω² z)` over `z` meters.
pub fn dispersion_all_pass(wave: &DualPolWaveform, beta2: f64, z_m: f64) -> DualPolWaveform {
    let n = wave.len();
    let omega = angular_frequencies(n, wave.fs);
    let mut fft = FftPair::new(n);
    let mut apply = |src: &[Complex64]| {
        let mut v = src.to_vec();
        fft.forward(&mut v);
        for (c, w) in v.iter_mut().zip(&omega) {
            *c *= Complex64::from_polar(1.0, beta2 / 2.0 * w * w * z_m);
        }
        fft.inverse(&mut v);
        v
    };
    let x = apply(&wave.x);
    let y = apply(&wave.y);
    DualPolWaveform {
        x,
        y,
        fs: wave.fs,
        f_center_offset: wave.f_center_offset,
    }
}

/// Symmetric split-step integration of the Manakov equation over one span.
///
/// Each step is a half linear step (dispersion and loss), a full nonlinear
/// phase rotation by (8/9)·γ·(|Ex|²+|Ey|²)·h shared by both polarizations,
/// and another half linear step. Adjacent half steps are fused in the
/// spectral domain.
pub fn ssfm_span(
    wave: &DualPolWaveform,
    cfg: &FiberSpanConfig,
    st: &SsfmSettings,
) -> Result<(DualPolWaveform, SsfmStats)> {
    cfg.validate()?;
    st.validate(cfg.length_km)?;
    check_finite(wave)?;
    let n = wave.len();
    if n == 0 {
        return Ok((wave.clone(), SsfmStats::default()));
    }
    let length = cfg.length_km * 1e3;
    let gamma = cfg.gamma_per_w_km / 1e3 * MANAKOV;
    let beta2 = cfg.beta2();
    let alpha = cfg.alpha_per_m();
    // Per-bin exponent rate of the linear operator.
    let rate: Vec<Complex64> = angular_frequencies(n, wave.fs)
        .into_iter()
        .map(|w| Complex64::new(-alpha / 2.0, beta2 / 2.0 * w * w))
        .collect();

    let peak = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .zip(y)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .fold(0.0, f64::max)
    };
    let next_step = |remaining: f64, peak_power: f64| -> f64 {
        let h = match *st {
            SsfmSettings::Fixed { step_km } => step_km * 1e3,
            SsfmSettings::NonlinearPhase {
                max_phase_rad,
                max_step_km,
            } => {
                let cap = max_step_km * 1e3;
                if gamma > 0.0 && peak_power > 0.0 {
                    (max_phase_rad / (gamma * peak_power)).min(cap)
                } else {
                    cap
                }
            }
        };
        // Avoid a sliver of a final step.
        if h >= remaining * (1.0 - 1e-12) || remaining - h < 1e-9 * length {
            remaining
        } else {
            h
        }
    };

    let mut fft = FftPair::new(n);
    let mut x = wave.x.clone();
    let mut y = wave.y.clone();
    let linear = |x: &mut [Complex64], y: &mut [Complex64], z: f64| {
        for ((a, b), r) in x.iter_mut().zip(y.iter_mut()).zip(&rate) {
            let f = (r * z).exp();
            *a *= f;
            *b *= f;
        }
    };

    let mut z = 0.0;
    let mut h = next_step(length, peak(&x, &y));
    let mut steps = 0;
    fft.forward(&mut x);
    fft.forward(&mut y);
    linear(&mut x, &mut y, h / 2.0);
    loop {
        fft.inverse(&mut x);
        fft.inverse(&mut y);
        let mut peak_power: f64 = 0.0;
        if gamma != 0.0 {
            for (a, b) in x.iter_mut().zip(y.iter_mut()) {
                let p = a.norm_sqr() + b.norm_sqr();
                peak_power = peak_power.max(p);
                let rot = Complex64::from_polar(1.0, gamma * p * h);
                *a *= rot;
                *b *= rot;
            }
        }
        steps += 1;
        z += h;
        fft.forward(&mut x);
        fft.forward(&mut y);
        let remaining = length - z;
        if remaining <= 1e-9 * length {
            linear(&mut x, &mut y, h / 2.0);
            break;
        }
        // Peak power decays with loss before the next nonlinear step.
        let h_next = next_step(remaining, peak_power * (-alpha * h).exp());
        linear(&mut x, &mut y, (h + h_next) / 2.0);
        h = h_next;
    }
    fft.inverse(&mut x);
    fft.inverse(&mut y);
    let out = DualPolWaveform {
        x,
        y,
        fs: wave.fs,
        f_center_offset: wave.f_center_offset,
    };
    check_finite(&out)?;
    Ok((out, SsfmStats { steps }))
}

/// Lumped lossless all-pass removing `(1 - rdps)` of the span dispersion.
pub fn inline_dispersion_comp(wave: &DualPolWaveform, cfg: &FiberSpanConfig) -> Result<DualPolWaveform> {
    cfg.validate()?;
    let z = cfg.length_km * 1e3 * (1.0 - cfg.rdps_fraction);
    if z == 0.0 {
        return Ok(wave.clone());
    }
    Ok(dispersion_all_pass(wave, -cfg.beta2(), z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gray_map, rrc_shape, BitFrame, ModFormat};
    use crate::units::dbm_to_watts;
    use rand::{Rng, SeedableRng};

    pub(crate) fn qam_wave(seed: u64, symbols: usize, power_dbm: f64) -> DualPolWaveform {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let fmt = ModFormat::qam16();
        let bits: Vec<u8> = (0..symbols * 8).map(|_| rng.random_range(0..2)).collect();
        let s = gray_map(&BitFrame::new(bits, 8).unwrap(), &fmt, 34e9).unwrap();
        let mut w = rrc_shape(&s, 0.1, 4, None).unwrap();
        let p = w.power();
        w.scale((dbm_to_watts(power_dbm) / p).sqrt());
        w
    }

    fn linear_span() -> FiberSpanConfig {
        FiberSpanConfig {
            gamma_per_w_km: 0.0,
            alpha_db_km: 0.0,
            ..FiberSpanConfig::nzdsf_80km()
        }
    }

    #[test]
    fn linear_limit_matches_all_pass() {
        let w = qam_wave(1, 1024, 0.0);
        let cfg = linear_span();
        let (out, stats) = ssfm_span(&w, &cfg, &SsfmSettings::Fixed { step_km: 0.5 }).unwrap();
        assert_eq!(stats.steps, 160);
        let want = dispersion_all_pass(&w, cfg.beta2(), 80e3);
        assert!(out.max_relative_diff(&want) < 1e-6);
    }

    #[test]
    fn constant_envelope_acquires_spm_phase() {
        let n = 256;
        let p_total = dbm_to_watts(3.0);
        let a = (p_total / 2.0).sqrt();
        let x = vec![Complex64::new(a, 0.0); n];
        let w = DualPolWaveform::new(x.clone(), x, 136e9).unwrap();
        let cfg = FiberSpanConfig {
            dispersion_ps_nm_km: 0.0,
            alpha_db_km: 0.0,
            ..FiberSpanConfig::nzdsf_80km()
        };
        let (out, _) = ssfm_span(&w, &cfg, &SsfmSettings::default()).unwrap();
        let want = MANAKOV * 1.6e-3 * p_total * 80e3;
        for v in out.x.iter().chain(&out.y) {
            assert!((v.arg() - want).abs() < 1e-6, "{} vs {want}", v.arg());
            assert!((v.norm() - a).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let w = DualPolWaveform::zeros(512, 136e9);
        let (out, _) = ssfm_span(&w, &FiberSpanConfig::nzdsf_80km(), &SsfmSettings::default()).unwrap();
        assert!(out.x.iter().chain(&out.y).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn lossless_propagation_conserves_energy() {
        let w = qam_wave(2, 1024, 6.0);
        let cfg = FiberSpanConfig {
            alpha_db_km: 0.0,
            ..FiberSpanConfig::nzdsf_80km()
        };
        let (out, _) = ssfm_span(&w, &cfg, &SsfmSettings::default()).unwrap();
        let rel = (out.energy() - w.energy()).abs() / w.energy();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn halving_steps_barely_changes_the_output() {
        let w = qam_wave(3, 1024, 4.0);
        let cfg = FiberSpanConfig::nzdsf_80km();
        let st = SsfmSettings::default();
        let (a, sa) = ssfm_span(&w, &cfg, &st).unwrap();
        let (b, sb) = ssfm_span(&w, &cfg, &st.refined()).unwrap();
        assert!(sb.steps > sa.steps);
        let diff: f64 = a.x.iter().zip(&b.x).chain(a.y.iter().zip(&b.y)).map(|(p, q)| (p - q).norm_sqr()).sum();
        let rel = (diff / b.energy()).sqrt();
        assert!(rel < 1e-4, "{rel}");
    }

    #[test]
    fn linear_span_commutes_with_compensation() {
        let w = qam_wave(4, 512, 0.0);
        let cfg = linear_span();
        let st = SsfmSettings::Fixed { step_km: 4.0 };
        let (a, _) = ssfm_span(&inline_dispersion_comp(&w, &cfg).unwrap(), &cfg, &st).unwrap();
        let (b0, _) = ssfm_span(&w, &cfg, &st).unwrap();
        let b = inline_dispersion_comp(&b0, &cfg).unwrap();
        assert!(a.max_relative_diff(&b) < 1e-9);
    }

    #[test]
    fn compensation_edge_cases() {
        let w = qam_wave(5, 512, 0.0);
        let full_residual = FiberSpanConfig {
            rdps_fraction: 1.0,
            ..FiberSpanConfig::nzdsf_80km()
        };
        assert_eq!(inline_dispersion_comp(&w, &full_residual).unwrap(), w);

        // Full compensation after a lossy linear span recovers the input up to loss.
        let cfg = FiberSpanConfig {
            gamma_per_w_km: 0.0,
            rdps_fraction: 0.0,
            ..FiberSpanConfig::nzdsf_80km()
        };
        let (prop, _) = ssfm_span(&w, &cfg, &SsfmSettings::Fixed { step_km: 10.0 }).unwrap();
        let mut back = inline_dispersion_comp(&prop, &cfg).unwrap();
        back.scale(cfg.span_loss().sqrt());
        assert!(back.max_relative_diff(&w) < 1e-6);

        // Two half compensations equal one full compensation.
        let half = FiberSpanConfig {
            rdps_fraction: 0.5,
            ..cfg.clone()
        };
        let twice = inline_dispersion_comp(&inline_dispersion_comp(&w, &half).unwrap(), &half).unwrap();
        let once = inline_dispersion_comp(&w, &cfg).unwrap();
        assert!(twice.max_relative_diff(&once) < 1e-9);
    }

    #[test]
    fn invalid_inputs() {
        let mut w = qam_wave(6, 64, 0.0);
        let cfg = FiberSpanConfig::nzdsf_80km();
        assert!(ssfm_span(&w, &cfg, &SsfmSettings::Fixed { step_km: 100.0 }).is_err());
        w.x[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            ssfm_span(&w, &cfg, &SsfmSettings::default()),
            Err(Error::Numeric(_))
        ));
    }
}
