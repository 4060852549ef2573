//! Training losses with analytic gradients. LLRs are positive for bit 0.

use crate::error::{shape_err, Result};
use crate::exit::softplus;
use ndarray::{Array2, ArrayView2};

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sign(b: u8) -> f64 {
    1.0 - 2.0 * b as f64
}

/// Mean of `softplus(−(1−2b)·L)` over all bits, in nats.
pub fn loss_bce_multilabel(llrs: &[f64], bits: &[u8]) -> Result<f64> {
    if llrs.len() != bits.len() || llrs.is_empty() {
        return Err(shape_err(format!("{} LLRs and {} bits", llrs.len(), bits.len())));
    }
    let s: f64 = llrs
        .iter()
        .zip(bits)
        .map(|(&l, &b)| softplus(-sign(b) * l))
        .sum();
    Ok(s / llrs.len() as f64)
}

/// BCE loss and its gradient with respect to `llrs` (row-major bits).
pub fn bce_with_grad(llrs: ArrayView2<f64>, bits: &[u8]) -> Result<(f64, Array2<f64>)> {
    if llrs.len() != bits.len() || bits.is_empty() {
        return Err(shape_err(format!("{} LLRs and {} bits", llrs.len(), bits.len())));
    }
    let n = bits.len() as f64;
    let mut grad = Array2::zeros(llrs.raw_dim());
    let mut loss = 0.0;
    for ((g, &l), &b) in grad.iter_mut().zip(llrs.iter()).zip(bits) {
        let s = sign(b);
        loss += softplus(-s * l);
        *g = -s * sigmoid(-s * l) / n;
    }
    Ok((loss / n, grad))
}

/// Which branch of the min-max loss was active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinMaxBranch {
    Ext,
    App,
}

/// `max(BCE(ext), BCE(app))`.
pub fn loss_teq_minmax(ext: &[f64], app: &[f64], bits: &[u8]) -> Result<f64> {
    Ok(loss_bce_multilabel(ext, bits)?.max(loss_bce_multilabel(app, bits)?))
}

/// Min-max loss with the gradient with respect to the EXT logits. Since
/// `app = ext + apr`, the APP branch has the same gradient shape. Ties go
/// to EXT.
pub fn minmax_with_grad(
    ext: ArrayView2<f64>,
    app: ArrayView2<f64>,
    bits: &[u8],
) -> Result<(f64, Array2<f64>, MinMaxBranch)> {
    let (le, ge) = bce_with_grad(ext, bits)?;
    let (la, ga) = bce_with_grad(app, bits)?;
    Ok(if la > le {
        (la, ga, MinMaxBranch::App)
    } else {
        (le, ge, MinMaxBranch::Ext)
    })
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Mean softmax cross-entropy over the joint DP label.
pub fn loss_nb_softmax(logits: ArrayView2<f64>, classes: &[usize]) -> Result<f64> {
    Ok(nb_with_grad(logits, classes)?.0)
}

pub fn nb_with_grad(logits: ArrayView2<f64>, classes: &[usize]) -> Result<(f64, Array2<f64>)> {
    if logits.nrows() != classes.len() || classes.is_empty() {
        return Err(shape_err(format!(
            "{} logit rows for {} labels",
            logits.nrows(),
            classes.len()
        )));
    }
    let k = logits.ncols();
    if let Some(&c) = classes.iter().find(|&&c| c >= k) {
        return Err(shape_err(format!("class {c} out of range for {k} logits")));
    }
    let n = classes.len() as f64;
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    for (r, &c) in classes.iter().enumerate() {
        let row = logits.row(r);
        let lse = log_sum_exp(row.iter().copied());
        loss += lse - row[c];
        for j in 0..k {
            grad[[r, j]] = (row[j] - lse).exp() / n;
        }
        grad[[r, c]] -= 1.0 / n;
    }
    Ok((loss / n, grad))
}

/// Joint label of `bits` (MSB first), the class index of the softmax head.
pub fn class_of(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

/// Bit LLRs from joint-label logits by log-sum-exp marginalization.
pub fn marginal_llrs(logits: ArrayView2<f64>, bits_per_symbol: usize) -> Array2<f64> {
    let k = logits.ncols();
    let mut out = Array2::zeros((logits.nrows(), bits_per_symbol));
    for (r, row) in logits.rows().into_iter().enumerate() {
        for b in 0..bits_per_symbol {
            let shift = bits_per_symbol - 1 - b;
            let zero = (0..k).filter(|c| (c >> shift) & 1 == 0).map(|c| row[c]);
            let one = (0..k).filter(|c| (c >> shift) & 1 == 1).map(|c| row[c]);
            out[[r, b]] = log_sum_exp(zero) - log_sum_exp(one);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn bce_examples() {
        let l = loss_bce_multilabel(&[0.0; 6], &[0, 1, 0, 1, 1, 0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        // Confident and correct: softplus(-50) = log1p(e^-50) ≈ 1.9e-22.
        let c = loss_bce_multilabel(&[50.0, -50.0], &[0, 1]).unwrap();
        assert!(c < 2e-22 && c > 0.0);
    }

    #[test]
    fn bce_equals_sigmoid_cross_entropy() {
        let llrs = [-3.2, -0.4, 0.0, 0.7, 5.5];
        let bits = [0u8, 1, 1, 0, 1];
        let direct: f64 = llrs
            .iter()
            .zip(&bits)
            .map(|(&l, &b)| {
                let p0 = 1.0 / (1.0 + (-l as f64).exp());
                let t = 1.0 - b as f64;
                -(t * p0.ln() + (1.0 - t) * (1.0 - p0).ln())
            })
            .sum::<f64>()
            / 5.0;
        assert!((loss_bce_multilabel(&llrs, &bits).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn minmax_examples() {
        // Build heads with known losses via a single bit each.
        let b = [0u8];
        let ext = [(0.3f64.exp() - 1.0).ln() * -1.0];
        let app = [(0.2f64.exp() - 1.0).ln() * -1.0];
        let v = loss_teq_minmax(&ext, &app, &b).unwrap();
        assert!((v - 0.3).abs() < 1e-12);
        let e = array![[0.4, -1.0]];
        let (l, _, br) = minmax_with_grad(e.view(), e.view(), &[0, 1]).unwrap();
        assert_eq!(br, MinMaxBranch::Ext);
        assert!((l - loss_bce_multilabel(&[0.4, -1.0], &[0, 1]).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn nb_examples() {
        let u = Array2::<f64>::zeros((3, 16));
        let l = loss_nb_softmax(u.view(), &[0, 5, 15]).unwrap();
        assert!((l - 4.0 * std::f64::consts::LN_2).abs() < 1e-12);
        let mut o = Array2::<f64>::zeros((1, 16));
        o[[0, 7]] = 50.0;
        assert!(loss_nb_softmax(o.view(), &[7]).unwrap() < 1e-20);
        assert!(loss_nb_softmax(o.view(), &[16]).is_err());
    }

    #[test]
    fn nb_matches_reference() {
        let logits: Array2<f64> = array![[0.3, -1.2, 2.2, 0.0], [5.0, 4.0, -3.0, 1.0]];
        let classes = [2, 1];
        let reference: f64 = classes
            .iter()
            .enumerate()
            .map(|(r, &c)| {
                let z: f64 = logits.row(r).iter().map(|v| v.exp()).sum();
                -(logits[[r, c]].exp() / z).ln()
            })
            .sum::<f64>()
            / 2.0;
        assert!((loss_nb_softmax(logits.view(), &classes).unwrap() - reference).abs() < 1e-12);
    }

    #[test]
    fn marginalization_of_independent_bits() {
        // Logits that factor over two bits give back the per-bit LLRs.
        let (l0, l1) = (1.3, -0.4);
        let logits = Array2::from_shape_fn((1, 4), |(_, c)| {
            let b0 = (c >> 1) & 1;
            let b1 = c & 1;
            (if b0 == 0 { l0 } else { 0.0 }) + (if b1 == 0 { l1 } else { 0.0 })
        });
        let m = marginal_llrs(logits.view(), 2);
        assert!((m[[0, 0]] - l0).abs() < 1e-12);
        assert!((m[[0, 1]] - l1).abs() < 1e-12);
        assert_eq!(class_of(&[1, 0, 1]), 5);
    }
}
