use super::{BitFrame, ModFormat, SymbolFrame};
use crate::error::{domain_err, Result};
use num_complex::Complex64;

fn log_sum_exp(vals: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = vals.collect();
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

/// Per-polarization bit LLRs of one received sample, appended to `out`.
pub(crate) fn llrs_for_sample(
    r: Complex64,
    fmt: &ModFormat,
    noise_var: f64,
    metric: &mut Vec<f64>,
    out: &mut Vec<f64>,
) {
    metric.clear();
    metric.extend(fmt.points().iter().map(|p| -(r - p).norm_sqr() / noise_var));
    for k in 0..fmt.m() {
        let zero = log_sum_exp(
            metric
                .iter()
                .enumerate()
                .filter(|(l, _)| fmt.label_bit(*l, k) == 0)
                .map(|(_, v)| *v),
        );
        let one = log_sum_exp(
            metric
                .iter()
                .enumerate()
                .filter(|(l, _)| fmt.label_bit(*l, k) == 1)
                .map(|(_, v)| *v),
        );
        out.push(zero - one);
    }
}

/// Exact (log-sum-exp, not max-log) bit LLRs under circular Gaussian noise of total variance
/// `noise_var` per polarization. Output order per DP symbol is
/// `[x-pol bits, y-pol bits]`, positive meaning bit 0.
pub fn exact_llr_demap(rx: &SymbolFrame, fmt: &ModFormat, noise_var: f64) -> Result<Vec<f64>> {
    if !(noise_var > 0.0) {
        return Err(domain_err(format!("noise variance must be positive, got {noise_var}")));
    }
    let mut out = Vec::with_capacity(rx.len() * fmt.bits_per_dp_symbol());
    let mut metric = Vec::with_capacity(fmt.order());
    for (x, y) in rx.x.iter().zip(&rx.y) {
        llrs_for_sample(*x, fmt, noise_var, &mut metric, &mut out);
        llrs_for_sample(*y, fmt, noise_var, &mut metric, &mut out);
    }
    Ok(out)
}

/// Nearest-point decisions back to bits.
pub fn hard_demap(rx: &SymbolFrame, fmt: &ModFormat) -> BitFrame {
    let m = fmt.m();
    let mut bits = Vec::with_capacity(rx.len() * 2 * m);
    for (x, y) in rx.x.iter().zip(&rx.y) {
        for r in [x, y] {
            let l = fmt.nearest(*r);
            bits.extend((0..m).map(|k| fmt.label_bit(l, k)));
        }
    }
    BitFrame::new(bits, 2 * m).expect("consistent by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::gray_map;
    use proptest::prelude::*;

    /// Plain summation of exponentials, no log-domain tricks.
    fn brute_force(r: Complex64, fmt: &ModFormat, nv: f64, k: usize) -> f64 {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for (l, p) in fmt.points().iter().enumerate() {
            let w = (-(r - p).norm_sqr() / nv).exp();
            if fmt.label_bit(l, k) == 0 {
                s0 += w;
            } else {
                s1 += w;
            }
        }
        (s0 / s1).ln()
    }

    #[test]
    fn origin_gives_zero_llrs_for_qpsk() {
        let f = ModFormat::qpsk();
        let z = Complex64::new(0.0, 0.0);
        let rx = SymbolFrame::new(vec![z], vec![z], 1.0).unwrap();
        let l = exact_llr_demap(&rx, &f, 0.3).unwrap();
        assert!(l.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn small_noise_recovers_bits_with_growing_confidence() {
        let f = ModFormat::qam16();
        let bits = BitFrame::new(vec![1, 0, 1, 1, 0, 1, 0, 0], 8).unwrap();
        let s = gray_map(&bits, &f, 1.0).unwrap();
        let mut last = 0.0;
        for nv in [1e-1, 1e-2, 1e-3] {
            let l = exact_llr_demap(&s, &f, nv).unwrap();
            for (v, b) in l.iter().zip(bits.bits()) {
                assert_eq!(*v < 0.0, *b == 1);
            }
            let mag = l.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            assert!(mag > last);
            last = mag;
        }
    }

    #[test]
    fn nonpositive_noise_is_rejected() {
        let f = ModFormat::qpsk();
        let rx = SymbolFrame::new(vec![], vec![], 1.0).unwrap();
        assert!(exact_llr_demap(&rx, &f, 0.0).is_err());
        assert!(exact_llr_demap(&rx, &f, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn matches_direct_summation(
            m in prop::sample::select(vec![2usize, 4]),
            re in -1.5f64..1.5, im in -1.5f64..1.5,
            nv in 0.05f64..2.0,
        ) {
            let f = ModFormat::square_qam(m).unwrap();
            let r = Complex64::new(re, im);
            let rx = SymbolFrame::new(vec![r], vec![r], 1.0).unwrap();
            let l = exact_llr_demap(&rx, &f, nv).unwrap();
            for k in 0..m {
                let want = brute_force(r, &f, nv, k);
                prop_assert!((l[k] - want).abs() < 1e-9, "k={} {} vs {}", k, l[k], want);
            }
        }

        #[test]
        fn gray_map_then_hard_demap_is_identity(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f = ModFormat::qam64();
            let bits: Vec<u8> = (0..12 * 40).map(|_| rng.random_range(0..2)).collect();
            let frame = BitFrame::new(bits, 12).unwrap();
            let s = gray_map(&frame, &f, 1.0).unwrap();
            prop_assert_eq!(hard_demap(&s, &f), frame);
        }
    }
}
