//! Minibatch training with early stopping on a held-out split.

use super::adam::{Adam, AdamConfig};
use super::features::WindowSet;
use super::loss::{bce_with_grad, class_of, minmax_with_grad, nb_with_grad};
use super::model::{HeadKind, NeuralModel, Topology};
use crate::error::{Error, Result};
use crate::exit::{apr_sigma, synthesize_apr_with};
use crate::par::{derive_seed, Exec};
use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    BceMultilabel,
    NbSoftmax,
    TeqMinmax,
}

impl LossMode {
    pub fn head(self) -> HeadKind {
        match self {
            LossMode::NbSoftmax => HeadKind::Symbols,
            _ => HeadKind::Bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub loss_mode: LossMode,
    pub seed: u64,
    pub width: usize,
    pub blocks: usize,
    pub dropout: f64,
    pub validation_fraction: f64,
}

impl TrainSpec {
    /// Desk-scale defaults for the given loss.
    pub fn new(loss_mode: LossMode) -> Self {
        let teq = loss_mode == LossMode::TeqMinmax;
        Self {
            adam: AdamConfig::default(),
            batch_size: if teq { 1000 } else { 100 },
            max_epochs: 500,
            patience: 13,
            loss_mode,
            seed: 1,
            width: 128,
            blocks: 4,
            dropout: if teq { 0.0 } else { 0.5 },
            validation_fraction: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.patience > self.max_epochs {
            return Err(Error::Config("patience exceeds max_epochs".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch-norm needs at least 2 examples per batch".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config("validation fraction must be in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// `None` for epoch 0.
    pub train_loss: Option<f64>,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Epoch 0 is the untrained model.
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn best_val_loss(&self) -> f64 {
        self.epochs[self.best_epoch].val_loss
    }
}

/// Loss of a model output and its gradient with respect to EXT.
pub fn loss_and_grad(
    mode: LossMode,
    ext: ArrayView2<f64>,
    app: ArrayView2<f64>,
    target_bits: &[u8],
    bits_per_symbol: usize,
) -> Result<(f64, Array2<f64>)> {
    match mode {
        LossMode::BceMultilabel => bce_with_grad(ext, target_bits),
        LossMode::TeqMinmax => minmax_with_grad(ext, app, target_bits).map(|(l, g, _)| (l, g)),
        LossMode::NbSoftmax => {
            let classes: Vec<usize> = target_bits.chunks(bits_per_symbol).map(class_of).collect();
            nb_with_grad(ext, &classes)
        }
    }
}

/// Gaussian a-priori block for `rows`, each row with its own `I_in ~ U[0,1]`.
pub fn random_apr_block<R: Rng>(ws: &WindowSet, rows: &[usize], rng: &mut R) -> Array2<f64> {
    let per_row = ws.bits_per_symbol() * ws.window();
    let bits = ws.window_bits(rows);
    let mut out = Array2::zeros((rows.len(), per_row));
    for (r, chunk) in bits.chunks(per_row).enumerate() {
        let sigma = apr_sigma(rng.random::<f64>());
        let row = out.row_mut(r);
        synthesize_apr_with(chunk, sigma, rng, row.into_slice().unwrap());
    }
    out
}

/// Trains a fresh model on `ws`. Returns the parameters of the epoch with
/// the lowest validation loss.
pub fn train(ws: &WindowSet, spec: &TrainSpec, exec: Exec) -> Result<(NeuralModel, TrainHistory)> {
    spec.validate()?;
    if ws.len() < 4 {
        return Err(Error::InputShape("training set is too small".into()));
    }
    let topo = Topology {
        window: ws.window(),
        bits_per_symbol: ws.bits_per_symbol(),
        width: spec.width,
        blocks: spec.blocks,
        head: spec.loss_mode.head(),
    };
    let mut model = NeuralModel::new(topo, spec.dropout, spec.seed)?;
    let (mean, sd) = ws.real_stats();
    model.set_input_stats(mean, sd)?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 1, 0));
    let mut order: Vec<usize> = (0..ws.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((ws.len() as f64 * spec.validation_fraction).round() as usize).clamp(1, ws.len() - 2);
    let val_rows: Vec<usize> = order[..n_val].to_vec();
    let mut train_rows: Vec<usize> = order[n_val..].to_vec();
    let teq = spec.loss_mode == LossMode::TeqMinmax;
    let bps = ws.bits_per_symbol();

    let val_apr = teq.then(|| random_apr_block(ws, &val_rows, &mut ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 2, 0))));
    let val_x = ws.batch_with_apr(&val_rows, val_apr.as_ref())?;
    let val_bits = ws.rows_bits(&val_rows);
    let val_loss = |m: &NeuralModel| -> Result<f64> {
        let (ext, app) = m.forward_eval_batched(val_x.view(), 4096, exec)?;
        Ok(loss_and_grad(spec.loss_mode, ext.view(), app.view(), &val_bits, bps)?.0)
    };

    let mut adam = Adam::new(spec.adam, model.param_count());
    let initial = val_loss(&model)?;
    let mut history = TrainHistory {
        epochs: vec![EpochRecord {
            epoch: 0,
            train_loss: None,
            val_loss: initial,
        }],
        best_epoch: 0,
        stopped_early: false,
    };
    let mut best = (model.params.clone(), model.bn_running.clone(), initial);
    let batch = spec.batch_size.min(train_rows.len());
    for epoch in 1..=spec.max_epochs {
        let mut ep_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 3, epoch as u64));
        train_rows.shuffle(&mut ep_rng);
        let mut total = 0.0;
        let mut count = 0usize;
        for (b, rows) in train_rows.chunks(batch).enumerate() {
            if rows.len() < 2 {
                continue;
            }
            let apr = teq.then(|| random_apr_block(ws, rows, &mut ep_rng));
            let x = ws.batch_with_apr(rows, apr.as_ref())?;
            let out = model.forward_train(x.view(), derive_seed(spec.seed, epoch as u64, b as u64))?;
            let bits = ws.rows_bits(rows);
            let (loss, g) = loss_and_grad(spec.loss_mode, out.ext.view(), out.app.view(), &bits, bps)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite training loss at epoch {epoch}, batch {b}"
                )));
            }
            let grad = model.backward(out.cache.as_ref().unwrap(), &g)?;
            adam.step(&mut model.params, &grad);
            total += loss * rows.len() as f64;
            count += rows.len();
        }
        let v = val_loss(&model)?;
        if !v.is_finite() {
            return Err(Error::Numeric(format!("non-finite validation loss at epoch {epoch}")));
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: Some(total / count.max(1) as f64),
            val_loss: v,
        });
        log::debug!("epoch {epoch}: train {:.5} val {v:.5}", total / count.max(1) as f64);
        if v < best.2 {
            best = (model.params.clone(), model.bn_running.clone(), v);
            history.best_epoch = epoch;
        }
        if epoch - history.best_epoch >= spec.patience {
            history.stopped_early = true;
            break;
        }
    }
    model.params = best.0;
    model.bn_running = best.1;
    model.trained = true;
    Ok((model, history))
}
