//! Root-raised-cosine pulse shaping.
//!
//! Blocks are treated as periodic (the fiber model integrates with FFTs over
//! the whole block), so the default filter is the exact RRC frequency response
//! evaluated on the block's DFT grid. The cascade of two such filters is the
//! periodized raised cosine, which has exactly zero ISI at symbol instants.
//! A truncated time-domain FIR is available by passing a span.

use super::{DualPolWaveform, SymbolFrame};
use crate::dsp::{circular_convolve_centered, fft_frequencies, FftPair};
use crate::error::{domain_err, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

fn check_params(rolloff: f64, oversampling: usize) -> Result<()> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(domain_err(format!("rolloff must lie in (0, 1], got {rolloff}")));
    }
    if oversampling < 2 {
        return Err(domain_err(format!("oversampling must be >= 2, got {oversampling}")));
    }
    Ok(())
}

/// Raised-cosine spectrum at frequency `nu` in units of the symbol rate,
/// with RC(0) = 1.
pub fn raised_cosine_spectrum(nu: f64, rolloff: f64) -> f64 {
    let a = nu.abs();
    let lo = (1.0 - rolloff) / 2.0;
    let hi = (1.0 + rolloff) / 2.0;
    if a <= lo {
        1.0
    } else if a <= hi {
        0.5 * (1.0 + (PI / rolloff * (a - lo)).cos())
    } else {
        0.0
    }
}

/// Continuous-time RRC impulse response at `t` symbol periods, unit energy.
pub fn rrc_impulse(t: f64, rolloff: f64) -> f64 {
    let b = rolloff;
    if t.abs() < 1e-12 {
        return 1.0 - b + 4.0 * b / PI;
    }
    if ((4.0 * b * t).abs() - 1.0).abs() < 1e-9 {
        let a = PI / (4.0 * b);
        return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
    let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
    num / den
}

/// Fraction of the ideal RRC energy inside ±span/2 symbol periods.
pub fn rrc_energy_fraction(rolloff: f64, span_symbols: usize) -> f64 {
    // Simpson on a fine grid; the pulse is smooth after the special-casing.
    let per_symbol = 64usize;
    let half = span_symbols as f64 / 2.0;
    let n = span_symbols.max(1) * per_symbol;
    let h = 2.0 * half / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let t = -half + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * rrc_impulse(t, rolloff).powi(2);
    }
    acc * h / 3.0
}

/// Frequency-sampled RRC of period `span_symbols`, `span_symbols * oversampling`
/// taps centered at index `len / 2`, unit energy.
pub fn rrc_taps(rolloff: f64, oversampling: usize, span_symbols: usize) -> Result<Vec<f64>> {
    check_params(rolloff, oversampling)?;
    if span_symbols < 2 {
        return Err(domain_err("span must cover at least two symbols"));
    }
    let n = span_symbols * oversampling;
    let os = oversampling as f64;
    let mut h: Vec<Complex64> = fft_frequencies(n, os)
        .into_iter()
        .map(|nu| Complex64::new((os * raised_cosine_spectrum(nu, rolloff)).sqrt(), 0.0))
        .collect();
    let mut fft = FftPair::new(n);
    fft.inverse(&mut h);
    Ok((0..n)
        .map(|i| h[(i + n - n / 2) % n].re)
        .collect())
}

fn fir_taps(rolloff: f64, oversampling: usize, span_symbols: usize) -> Vec<f64> {
    let half = (span_symbols * oversampling / 2) as i64;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|n| rrc_impulse(n as f64 / oversampling as f64, rolloff))
        .collect();
    let e: f64 = taps.iter().map(|t| t * t).sum();
    let s = e.sqrt().recip();
    taps.iter_mut().for_each(|t| *t *= s);
    taps
}

/// Circular RRC filtering of a sample stream at `fs` for symbol rate `baud`.
/// `span_symbols = None` uses the exact periodic response; `Some(span)` a
/// truncated unit-energy FIR.
pub fn rrc_filter(
    data: &[Complex64],
    rolloff: f64,
    baud: f64,
    fs: f64,
    span_symbols: Option<usize>,
) -> Result<Vec<Complex64>> {
    let os = fs / baud;
    match span_symbols {
        None => {
            let mut out = data.to_vec();
            crate::dsp::filter_in_frequency(&mut out, fs, |f| {
                Complex64::new((os * raised_cosine_spectrum(f / baud, rolloff)).sqrt(), 0.0)
            });
            Ok(out)
        }
        Some(span) => {
            let osi = os.round() as usize;
            if (os - osi as f64).abs() > 1e-9 {
                return Err(domain_err("FIR mode needs an integer oversampling factor"));
            }
            check_params(rolloff, osi)?;
            if span * osi + 1 > data.len() {
                return Err(domain_err(format!(
                    "filter span {span} symbols exceeds the block of {} samples",
                    data.len()
                )));
            }
            let frac = rrc_energy_fraction(rolloff, span);
            if frac < 0.999 {
                log::warn!(
                    "RRC span of {span} symbols holds only {:.4}% of the pulse energy",
                    100.0 * frac
                );
            }
            Ok(circular_convolve_centered(data, &fir_taps(rolloff, osi, span)))
        }
    }
}

/// Upsamples and pulse-shapes both polarizations. Each symbol's pulse has
/// unit energy, so the mean sample power per polarization is `E|s|² / os`.
pub fn rrc_shape(
    symbols: &SymbolFrame,
    rolloff: f64,
    oversampling: usize,
    span_symbols: Option<usize>,
) -> Result<DualPolWaveform> {
    check_params(rolloff, oversampling)?;
    let fs = symbols.baud * oversampling as f64;
    let n = symbols.len() * oversampling;
    let upsample = |s: &[Complex64]| {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for (i, &c) in s.iter().enumerate() {
            v[i * oversampling] = c;
        }
        v
    };
    let x = rrc_filter(&upsample(&symbols.x), rolloff, symbols.baud, fs, span_symbols)?;
    let y = rrc_filter(&upsample(&symbols.y), rolloff, symbols.baud, fs, span_symbols)?;
    DualPolWaveform::new(x, y, fs)
}
