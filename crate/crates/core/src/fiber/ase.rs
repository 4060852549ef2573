use super::LinkConfig;
use crate::signal::DualPolWaveform;
use crate::units::{carrier_frequency, db_to_linear, PLANCK};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// One-sided ASE power spectral density per polarization in W/Hz,
/// accumulated over all spans: `N·(G−1)·hν·nsp` with `nsp = 10^(NF/10)/2`.
pub fn ase_psd_per_pol(link: &LinkConfig) -> f64 {
    let Some(nf_db) = link.edfa_nf_db else {
        return 0.0;
    };
    let gain = link.span.span_loss();
    let nsp = db_to_linear(nf_db) / 2.0;
    let hv = PLANCK * carrier_frequency(link.center_wavelength_nm());
    link.spans as f64 * (gain - 1.0) * hv * nsp
}

/// Adds all amplifier noise of the link at once, as white circular Gaussian
/// noise over the simulation bandwidth. Deterministic in `seed`.
pub fn lumped_ase(wave: &DualPolWaveform, link: &LinkConfig, seed: u64) -> DualPolWaveform {
    let psd = ase_psd_per_pol(link);
    if link.spans == 0 || psd <= 0.0 {
        return wave.clone();
    }
    let sigma = (psd * wave.fs / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = |src: &[Complex64]| -> Vec<Complex64> {
        src.iter()
            .map(|v| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                v + Complex64::new(re, im) * sigma
            })
            .collect()
    };
    let x = noisy(&wave.x);
    let y = noisy(&wave.y);
    DualPolWaveform {
        x,
        y,
        fs: wave.fs,
        f_center_offset: wave.f_center_offset,
    }
}
