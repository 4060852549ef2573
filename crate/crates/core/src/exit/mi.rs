use crate::error::{shape_err, Result};

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mutual information between bits and LLRs under the consistency
/// assumption: `1 − mean(log2(1 + exp(−(1−2b)·L)))`, clamped to [0, 1].
pub fn mi_from_llrs(llrs: &[f64], bits: &[u8]) -> Result<f64> {
    if llrs.is_empty() || llrs.len() != bits.len() {
        return Err(shape_err(format!(
            "{} LLRs and {} bits",
            llrs.len(),
            bits.len()
        )));
    }
    let total: f64 = llrs
        .iter()
        .zip(bits)
        .map(|(&l, &b)| {
            let signed = if b == 0 { l } else { -l };
            softplus(-signed)
        })
        .sum();
    let mean_bits = total / llrs.len() as f64 / std::f64::consts::LN_2;
    Ok((1.0 - mean_bits).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn limits() {
        let bits = [0u8, 1, 1, 0, 1];
        assert_eq!(mi_from_llrs(&[0.0; 5], &bits).unwrap(), 0.0);
        let l: Vec<f64> = bits.iter().map(|&b| 50.0 * (1.0 - 2.0 * b as f64)).collect();
        assert!(1.0 - mi_from_llrs(&l, &bits).unwrap() < 1e-9);
        assert!(mi_from_llrs(&[], &[]).is_err());
        assert!(mi_from_llrs(&[1.0], &[0, 1]).is_err());
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn invariant_to_permutation_and_flip(
            data in proptest::collection::vec((-20.0f64..20.0, 0u8..2), 1..200),
            rot in 0usize..200,
        ) {
            let (l, b): (Vec<f64>, Vec<u8>) = data.iter().copied().unzip();
            let base = mi_from_llrs(&l, &b).unwrap();
            let r = rot % l.len();
            let mut l2 = l.clone();
            let mut b2 = b.clone();
            l2.rotate_left(r);
            b2.rotate_left(r);
            prop_assert!((mi_from_llrs(&l2, &b2).unwrap() - base).abs() < 1e-12);
            let lf: Vec<f64> = l.iter().map(|x| -x).collect();
            let bf: Vec<u8> = b.iter().map(|x| 1 - x).collect();
            prop_assert!((mi_from_llrs(&lf, &bf).unwrap() - base).abs() < 1e-12);
        }
    }
}
