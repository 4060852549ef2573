//! Model checkpoints: a JSON manifest next to a little-endian f64 blob.
//!
//! Blob order: parameters (layout order), batch-norm running mean and
//! variance per layer, input mean, input std.

use super::model::{NeuralModel, Topology};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub topology: Topology,
    pub dropout: f64,
    pub trained: bool,
    pub param_count: usize,
    pub state_count: usize,
    pub seed: Option<u64>,
    /// Free-form training hyperparameters, recorded for provenance.
    pub hyperparameters: serde_json::Value,
}

pub fn blob_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

fn state_vec(model: &NeuralModel) -> Vec<f64> {
    let mut v = model.params.clone();
    for (m, s) in &model.bn_running {
        v.extend_from_slice(m);
        v.extend_from_slice(s);
    }
    v.extend_from_slice(&model.input_mean);
    v.extend_from_slice(&model.input_std);
    v
}

pub fn save_checkpoint(
    model: &NeuralModel,
    manifest_path: &Path,
    seed: Option<u64>,
    hyperparameters: serde_json::Value,
) -> Result<()> {
    let state = state_vec(model);
    let manifest = CheckpointManifest {
        format_version: CHECKPOINT_VERSION,
        topology: model.topology,
        dropout: model.dropout,
        trained: model.trained,
        param_count: model.param_count(),
        state_count: state.len(),
        seed,
        hyperparameters,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(manifest_path, text)?;
    let mut bytes = Vec::with_capacity(state.len() * 8);
    for v in state {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(blob_path(manifest_path), bytes)?;
    Ok(())
}

pub fn load_checkpoint(manifest_path: &Path) -> Result<(NeuralModel, CheckpointManifest)> {
    let text = std::fs::read_to_string(manifest_path)?;
    let man: CheckpointManifest =
        serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    if man.format_version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {}",
            man.format_version
        )));
    }
    let mut model = NeuralModel::new(man.topology, man.dropout, 0)?;
    if model.param_count() != man.param_count {
        return Err(Error::Format(format!(
            "manifest declares {} parameters, topology has {}",
            man.param_count,
            model.param_count()
        )));
    }
    let bytes = std::fs::read(blob_path(manifest_path))?;
    if bytes.len() != man.state_count * 8 || man.state_count != state_vec(&model).len() {
        return Err(Error::Format("parameter blob size does not match manifest".into()));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut it = vals.into_iter();
    let mut take = |n: usize| -> Vec<f64> { it.by_ref().take(n).collect() };
    model.params = take(man.param_count);
    let h = man.topology.width;
    for k in 0..model.bn_running.len() {
        let m = take(h);
        let s = take(h);
        model.bn_running[k] = (m, s);
    }
    let r = man.topology.real_len();
    model.input_mean = take(r);
    model.input_std = take(r);
    model.trained = man.trained;
    model.rebuild_layout();
    Ok((model, man))
}
