//! FFT helpers shared by the pulse shaper, the fiber model and the receiver.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Forward/inverse plan pair for one transform length.
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    len: usize,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform.
    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Inverse transform including the 1/N factor.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let s = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }
}

/// Frequencies of the DFT bins in FFT order, in Hz.
pub fn fft_frequencies(n: usize, fs: f64) -> Vec<f64> {
    let df = fs / n as f64;
    (0..n)
        .map(|k| {
            let k = k as i64;
            let kk = if k >= (n as i64 + 1) / 2 { k - n as i64 } else { k };
            kk as f64 * df
        })
        .collect()
}

/// Multiplies the spectrum of `data` by `response(f)` (circular filtering).
pub fn filter_in_frequency<F>(data: &mut [Complex64], fs: f64, response: F)
where
    F: Fn(f64) -> Complex64,
{
    let n = data.len();
    if n == 0 {
        return;
    }
    let mut fft = FftPair::new(n);
    fft.forward(data);
    for (v, f) in data.iter_mut().zip(fft_frequencies(n, fs)) {
        *v *= response(f);
    }
    fft.inverse(data);
}

/// Circular convolution of `data` with `taps` centered at `taps.len() / 2`.
pub fn circular_convolve_centered(data: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let n = data.len();
    let mut kernel = vec![Complex64::new(0.0, 0.0); n];
    let center = taps.len() / 2;
    for (i, &t) in taps.iter().enumerate() {
        let shift = (i as i64 - center as i64).rem_euclid(n as i64) as usize;
        kernel[shift] += t;
    }
    let mut fft = FftPair::new(n);
    let mut buf = data.to_vec();
    fft.forward(&mut buf);
    fft.forward(&mut kernel);
    for (a, b) in buf.iter_mut().zip(&kernel) {
        *a *= b;
    }
    fft.inverse(&mut buf);
    buf
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_follow_fft_order() {
        let f = fft_frequencies(4, 4.0);
        assert_eq!(f, vec![0.0, 1.0, -2.0, -1.0]);
        let f = fft_frequencies(5, 5.0);
        assert_eq!(f, vec![0.0, 1.0, 2.0, -2.0, -1.0]);
    }

    #[test]
    fn circular_convolution_matches_direct() {
        let data: Vec<Complex64> = (0..16)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let taps = [0.25, 0.5, 0.25];
        let out = circular_convolve_centered(&data, &taps);
        for k in 0..16 {
            let direct = data[(k + 15) % 16] * 0.25 + data[k] * 0.5 + data[(k + 1) % 16] * 0.25;
            assert!((out[k] - direct).norm() < 1e-12);
        }
    }
}
