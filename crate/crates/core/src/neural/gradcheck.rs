//! Central finite-difference check of the analytic gradients.

use super::model::NeuralModel;
use super::train::{loss_and_grad, LossMode};
use crate::error::Result;
use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn worst(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max)
    }
}

/// Relative error with an absolute floor, so entries whose gradient is
/// numerically zero do not dominate.
fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-7 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares backprop against central differences on up to
/// `per_tensor` entries of every tensor. Dropout masks are frozen by
/// reusing `seed` for every forward call.
pub fn gradient_check(
    model: &NeuralModel,
    x: ArrayView2<f64>,
    bits: &[u8],
    mode: LossMode,
    per_tensor: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let bps = model.topology.bits_per_symbol;
    let mut work = model.clone();
    let loss_at = |m: &mut NeuralModel| -> Result<f64> {
        let out = m.forward_train(x, seed)?;
        Ok(loss_and_grad(mode, out.ext.view(), out.app.view(), bits, bps)?.0)
    };
    let out = work.forward_train(x, seed)?;
    let (_, g) = loss_and_grad(mode, out.ext.view(), out.app.view(), bits, bps)?;
    let analytic = work.backward(out.cache.as_ref().unwrap(), &g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut tensors = Vec::new();
    for slot in model.layout().tensors.clone() {
        let n = slot.len();
        let picks: Vec<usize> = if n <= per_tensor {
            (0..n).collect()
        } else {
            (0..per_tensor).map(|_| rng.random_range(0..n)).collect()
        };
        let mut worst: f64 = 0.0;
        for &j in &picks {
            let i = slot.offset + j;
            let orig = work.params[i];
            let h = 1e-5 * orig.abs().max(1.0);
            work.params[i] = orig + h;
            let lp = loss_at(&mut work)?;
            work.params[i] = orig - h;
            let lm = loss_at(&mut work)?;
            work.params[i] = orig;
            let numeric = (lp - lm) / (2.0 * h);
            worst = worst.max(rel_err(analytic[i], numeric));
        }
        tensors.push(TensorCheck {
            name: slot.name.clone(),
            checked: picks.len(),
            max_rel_error: worst,
        });
    }
    Ok(GradCheckReport { tensors })
}
