use super::DualPolWaveform;
use crate::dsp::{fft_frequencies, FftPair};
use crate::error::{domain_err, shape_err, Result};
use num_complex::Complex64;

/// Frequency-multiplexes an odd number of channels around the center one.
///
/// Offsets are `(i - (n-1)/2) * spacing`, quantized to the DFT bin so the
/// shift is an exact circular rotation of each block spectrum.
pub fn wdm_mux(channels: &[DualPolWaveform], spacing_hz: f64) -> Result<DualPolWaveform> {
    let first = channels
        .first()
        .ok_or_else(|| shape_err("no channels to multiplex"))?;
    if channels.len() % 2 == 0 {
        return Err(shape_err("channel count must be odd (center channel at offset 0)"));
    }
    let (fs, n) = (first.fs, first.len());
    if channels.iter().any(|c| c.fs != fs || c.len() != n) {
        return Err(shape_err("channels must share sample rate and length"));
    }
    let half = (channels.len() / 2) as i64;
    let outer = half as f64 * spacing_hz + spacing_hz / 2.0;
    if half > 0 && outer > fs / 2.0 {
        return Err(domain_err(format!(
            "outer channel edge at {:.3} GHz aliases at fs = {:.3} GHz",
            outer * 1e-9,
            fs * 1e-9
        )));
    }
    if half == 0 {
        return Ok(first.clone());
    }
    let df = fs / n as f64;
    let mut fft = FftPair::new(n);
    let mut acc_x = vec![Complex64::new(0.0, 0.0); n];
    let mut acc_y = vec![Complex64::new(0.0, 0.0); n];
    for (i, ch) in channels.iter().enumerate() {
        let shift = ((i as i64 - half) as f64 * spacing_hz / df).round() as i64;
        for (src, acc) in [(&ch.x, &mut acc_x), (&ch.y, &mut acc_y)] {
            let mut spec = src.clone();
            fft.forward(&mut spec);
            for (k, v) in spec.iter().enumerate() {
                let dst = (k as i64 + shift).rem_euclid(n as i64) as usize;
                acc[dst] += v;
            }
        }
    }
    fft.inverse(&mut acc_x);
    fft.inverse(&mut acc_y);
    let mut out = DualPolWaveform::new(acc_x, acc_y, fs)?;
    out.f_center_offset = first.f_center_offset;
    Ok(out)
}

/// Ideal brick-wall selection of the band |f| <= bandwidth/2.
pub fn wdm_demux_center(wave: &DualPolWaveform, bandwidth_hz: f64) -> Result<DualPolWaveform> {
    if !(bandwidth_hz > 0.0) || bandwidth_hz > wave.fs {
        return Err(domain_err(format!(
            "bandwidth {bandwidth_hz} Hz must lie in (0, fs = {}]",
            wave.fs
        )));
    }
    let n = wave.len();
    let freqs = fft_frequencies(n, wave.fs);
    let edge = bandwidth_hz / 2.0 * (1.0 + 1e-12);
    let mut fft = FftPair::new(n);
    let mut pol = |src: &[Complex64]| {
        let mut v = src.to_vec();
        fft.forward(&mut v);
        for (c, f) in v.iter_mut().zip(&freqs) {
            if f.abs() > edge {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        fft.inverse(&mut v);
        v
    };
    let x = pol(&wave.x);
    let y = pol(&wave.y);
    let mut out = DualPolWaveform::new(x, y, wave.fs)?;
    out.f_center_offset = wave.f_center_offset;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gray_map, rrc_shape, BitFrame, ModFormat};
    use rand::{Rng, SeedableRng};

    fn channel(seed: u64, symbols: usize) -> DualPolWaveform {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let fmt = ModFormat::qam16();
        let bits: Vec<u8> = (0..symbols * 8).map(|_| rng.random_range(0..2)).collect();
        let s = gray_map(&BitFrame::new(bits, 8).unwrap(), &fmt, 34e9).unwrap();
        rrc_shape(&s, 0.1, 4, None).unwrap()
    }

    #[test]
    fn single_channel_is_identity() {
        let c = channel(1, 128);
        let out = wdm_mux(&[c.clone()], 37.4e9).unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn disjoint_channels_add_power() {
        let chans: Vec<_> = (0..3).map(|s| channel(s, 1024)).collect();
        let total: f64 = chans.iter().map(|c| c.power()).sum();
        let out = wdm_mux(&chans, 37.4e9).unwrap();
        let db = 10.0 * (out.power() / total).log10();
        assert!(db.abs() < 0.01, "{db} dB");
    }

    #[test]
    fn loopback_recovers_center_channel() {
        let chans: Vec<_> = (10..13).map(|s| channel(s, 1024)).collect();
        let out = wdm_mux(&chans, 37.4e9).unwrap();
        let back = wdm_demux_center(&out, 37.4e9).unwrap();
        let reference = &chans[1];
        let err: f64 = back
            .x
            .iter()
            .zip(&reference.x)
            .chain(back.y.iter().zip(&reference.y))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let evm_db = 10.0 * (err / reference.energy()).log10();
        assert!(evm_db < -30.0, "EVM {evm_db} dB");
    }

    #[test]
    fn full_band_demux_is_identity() {
        let c = channel(3, 256);
        let out = wdm_demux_center(&c, c.fs).unwrap();
        assert!(out.max_relative_diff(&c) < 1e-12);
        assert!(wdm_demux_center(&c, 2.0 * c.fs).is_err());
    }

    #[test]
    fn out_of_band_tone_is_removed() {
        let n = 4096;
        let fs = 136e9;
        let k = 1500; // about 49.8 GHz
        let tone: Vec<Complex64> = (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64))
            .collect();
        let w = DualPolWaveform::new(tone.clone(), tone, fs).unwrap();
        let out = wdm_demux_center(&w, 37.4e9).unwrap();
        assert!(out.power() < 1e-10 * w.power());
    }

    #[test]
    fn undersampled_outer_channel_is_an_error() {
        let chans: Vec<_> = (0..3).map(|s| channel(s, 64)).collect();
        let slow: Vec<_> = chans
            .into_iter()
            .map(|mut c| {
                c.fs = 68e9;
                c
            })
            .collect();
        assert!(wdm_mux(&slow, 37.4e9).is_err());
        assert!(wdm_mux(&slow[..2], 37.4e9).is_err());
    }
}
