use super::{inline_dispersion_comp, lumped_ase, ssfm_span, LinkConfig, SsfmSettings};
use crate::error::Result;
use crate::signal::DualPolWaveform;

/// Propagates through every span (fiber, inline compensation, gain equal to
/// the span loss) and adds the accumulated ASE before the receiver.
pub fn propagate_link(
    wave: &DualPolWaveform,
    link: &LinkConfig,
    st: &SsfmSettings,
    seed: u64,
) -> Result<DualPolWaveform> {
    link.validate()?;
    let amp = link.span.span_loss().sqrt();
    let mut field = wave.clone();
    for _ in 0..link.spans {
        let (out, _) = ssfm_span(&field, &link.span, st)?;
        field = inline_dispersion_comp(&out, &link.span)?;
        field.scale(amp);
    }
    Ok(lumped_ase(&field, link, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{dispersion_all_pass, FiberSpanConfig};
    use crate::signal::{gray_map, rrc_shape, BitFrame, ModFormat};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    fn wave(seed: u64) -> DualPolWaveform {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..512 * 8).map(|_| rng.random_range(0..2)).collect();
        let s = gray_map(&BitFrame::new(bits, 8).unwrap(), &ModFormat::qam16(), 34e9).unwrap();
        let mut w = rrc_shape(&s, 0.1, 4, None).unwrap();
        let p = w.power();
        w.scale((1e-3 / p).sqrt());
        w
    }

    fn linear_link(spans: usize, nf: Option<f64>) -> LinkConfig {
        LinkConfig {
            spans,
            span: FiberSpanConfig {
                gamma_per_w_km: 0.0,
                ..FiberSpanConfig::nzdsf_80km()
            },
            edfa_nf_db: nf,
            launch_power_dbm: 0.0,
        }
    }

    #[test]
    fn single_linear_span_leaves_residual_dispersion() {
        let w = wave(1);
        let l = linear_link(1, None);
        let out = propagate_link(&w, &l, &SsfmSettings::Fixed { step_km: 5.0 }, 0).unwrap();
        let want = dispersion_all_pass(&w, l.span.beta2(), 0.05 * 80e3);
        assert!(out.max_relative_diff(&want) < 1e-6);
    }

    #[test]
    fn global_phase_does_not_change_linear_snr() {
        let w = wave(2);
        let l = linear_link(4, Some(5.0));
        let rot = Complex64::from_polar(1.0, 0.7);
        let mut wr = w.clone();
        wr.x.iter_mut().chain(wr.y.iter_mut()).for_each(|v| *v *= rot);
        let st = SsfmSettings::Fixed { step_km: 10.0 };
        let clean = propagate_link(&w, &linear_link(4, None), &st, 0).unwrap();
        let snr = |out: &DualPolWaveform, reference: &DualPolWaveform| {
            let err: f64 = out
                .x
                .iter()
                .zip(&reference.x)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            reference.x.iter().map(|v| v.norm_sqr()).sum::<f64>() / err
        };
        let a = snr(&propagate_link(&w, &l, &st, 9).unwrap(), &clean);
        let mut clean_r = clean.clone();
        clean_r.x.iter_mut().for_each(|v| *v *= rot);
        let b = snr(&propagate_link(&wr, &l, &st, 9).unwrap(), &clean_r);
        assert!((a / b - 1.0).abs() < 1e-9, "{a} vs {b}");
    }
}
