use crate::error::{domain_err, Result};
use crate::signal::{rrc_filter, DualPolWaveform, SymbolFrame};

/// RRC matched filter followed by decimation at the zero-delay phase.
///
/// Both filters are zero-phase and applied circularly, so the optimal
/// sampling phase is sample 0 of every symbol period.
pub fn matched_filter_downsample(
    wave: &DualPolWaveform,
    rolloff: f64,
    oversampling: usize,
    span_symbols: Option<usize>,
) -> Result<SymbolFrame> {
    if oversampling < 2 || wave.len() % oversampling != 0 {
        return Err(domain_err(format!(
            "{} samples cannot be decimated by {oversampling}",
            wave.len()
        )));
    }
    let baud = wave.fs / oversampling as f64;
    let fx = rrc_filter(&wave.x, rolloff, baud, wave.fs, span_symbols)?;
    let fy = rrc_filter(&wave.y, rolloff, baud, wave.fs, span_symbols)?;
    let x = fx.into_iter().step_by(oversampling).collect();
    let y = fy.into_iter().step_by(oversampling).collect();
    SymbolFrame::new(x, y, baud)
}

/// Scales each polarization to unit mean power (ideal AGC).
pub fn normalize_power(frame: &SymbolFrame) -> SymbolFrame {
    let scale = |v: &[num_complex::Complex64]| {
        let p = crate::dsp::mean_power(v);
        let s = if p > 0.0 { p.sqrt().recip() } else { 1.0 };
        v.iter().map(|c| c * s).collect()
    };
    SymbolFrame {
        x: scale(&frame.x),
        y: scale(&frame.y),
        baud: frame.baud,
    }
}
