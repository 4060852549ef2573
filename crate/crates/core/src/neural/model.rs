//! Residual feed-forward equalizer.
//!
//! ```text
//! h0 = [std(reals) | apr] · W_in + b_in
//! h_k = h_{k-1} + Linear_k(Dropout(ReLU(BN_k(h_{k-1}))))      k = 1..B
//! ext = Linear_out(ReLU(BN_head(h_B)))
//! app = ext + apr(target)
//! ```
//!
//! All trainable parameters live in one flat vector; [`Layout`] names the
//! tensors inside it.

use crate::error::{shape_err, Error, Result};
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// `2m` bit LLRs, with the APP skip.
    Bits,
    /// `2^{2m}` joint-label logits.
    Symbols,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub window: usize,
    pub bits_per_symbol: usize,
    pub width: usize,
    pub blocks: usize,
    pub head: HeadKind,
}

impl Topology {
    pub fn input_len(&self) -> usize {
        (4 + self.bits_per_symbol) * self.window
    }

    pub fn real_len(&self) -> usize {
        4 * self.window
    }

    pub fn output_len(&self) -> usize {
        match self.head {
            HeadKind::Bits => self.bits_per_symbol,
            HeadKind::Symbols => 1 << self.bits_per_symbol,
        }
    }

    /// Column range of the target symbol's APR inside a feature row.
    pub fn target_apr_cols(&self) -> std::ops::Range<usize> {
        let start = self.real_len() + self.bits_per_symbol * (self.window / 2);
        start..start + self.bits_per_symbol
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window % 2 == 0 {
            return Err(Error::Config(format!("window {} must be odd", self.window)));
        }
        if self.bits_per_symbol == 0 || self.width == 0 {
            return Err(Error::Config("empty topology".into()));
        }
        if self.head == HeadKind::Symbols && self.bits_per_symbol > 16 {
            return Err(Error::Config("joint-label head too large".into()));
        }
        Ok(())
    }
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub tensors: Vec<TensorSlot>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorSlot {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl TensorSlot {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

impl Layout {
    pub fn new(t: &Topology) -> Self {
        let (f, h, o) = (t.input_len(), t.width, t.output_len());
        let mut shapes: Vec<(String, usize, usize)> =
            vec![("in.w".into(), f, h), ("in.b".into(), 1, h)];
        for k in 0..t.blocks {
            shapes.push((format!("block{k}.bn.gamma"), 1, h));
            shapes.push((format!("block{k}.bn.beta"), 1, h));
            shapes.push((format!("block{k}.w"), h, h));
            shapes.push((format!("block{k}.b"), 1, h));
        }
        shapes.push(("head.bn.gamma".into(), 1, h));
        shapes.push(("head.bn.beta".into(), 1, h));
        shapes.push(("out.w".into(), h, o));
        shapes.push(("out.b".into(), 1, o));
        let mut offset = 0;
        let tensors = shapes
            .into_iter()
            .map(|(name, rows, cols)| {
                let slot = TensorSlot {
                    name,
                    offset,
                    rows,
                    cols,
                };
                offset += rows * cols;
                slot
            })
            .collect();
        Self {
            tensors,
            total: offset,
        }
    }

    pub fn slot(&self, name: &str) -> &TensorSlot {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .unwrap_or_else(|| panic!("no tensor {name}"))
    }
}

/// Forward mode. Training draws inverted-dropout masks from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train { seed: u64 },
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel {
    pub topology: Topology,
    pub dropout: f64,
    pub params: Vec<f64>,
    /// Running mean and variance per batch-norm layer (blocks, then head).
    pub bn_running: Vec<(Vec<f64>, Vec<f64>)>,
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub trained: bool,
    layout: Layout,
}

/// Per-layer quantities kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    x: Array2<f64>,
    bn: Vec<BnCache>,
    masks: Vec<Option<Array2<f64>>>,
    post: Vec<Array2<f64>>,
    head_relu: Array2<f64>,
}

#[derive(Debug, Clone)]
struct BnCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    out: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// EXT LLRs for the bit head, joint-label logits for the symbol head.
    pub ext: Array2<f64>,
    /// `ext + apr(target)` for the bit head; equal to `ext` otherwise.
    pub app: Array2<f64>,
    pub cache: Option<Cache>,
}

impl NeuralModel {
    pub fn new(topology: Topology, dropout: f64, seed: u64) -> Result<Self> {
        topology.validate()?;
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Config(format!("dropout {dropout} outside [0, 1)")));
        }
        let layout = Layout::new(&topology);
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in &layout.tensors {
            let p = &mut params[t.range()];
            if t.name.ends_with(".w") {
                // He initialization; residual branches start small.
                let mut scale = (2.0 / t.rows as f64).sqrt();
                if t.name.starts_with("block") {
                    scale *= 0.5;
                }
                if t.name == "out.w" {
                    scale = (1.0 / t.rows as f64).sqrt();
                }
                for v in p.iter_mut() {
                    *v = scale * rng.sample::<f64, _>(StandardNormal);
                }
            } else if t.name.ends_with("gamma") {
                p.fill(1.0);
            }
        }
        let h = topology.width;
        Ok(Self {
            topology,
            dropout,
            params,
            bn_running: vec![(vec![0.0; h], vec![1.0; h]); topology.blocks + 1],
            input_mean: vec![0.0; topology.real_len()],
            input_std: vec![1.0; topology.real_len()],
            trained: false,
            layout,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    pub fn tensor(&self, name: &str) -> ArrayView2<'_, f64> {
        let t = self.layout.slot(name);
        ArrayView2::from_shape((t.rows, t.cols), &self.params[t.range()]).unwrap()
    }

    pub fn tensor_mut(&mut self, name: &str) -> ArrayViewMut2<'_, f64> {
        let t = self.layout.slot(name).clone();
        ArrayViewMut2::from_shape((t.rows, t.cols), &mut self.params[t.range()]).unwrap()
    }

    fn vec1(&self, name: &str) -> ArrayView1<'_, f64> {
        self.tensor(name).index_axis_move(Axis(0), 0)
    }

    /// Sets the input standardization of the real features.
    pub fn set_input_stats(&mut self, mean: Vec<f64>, std: Vec<f64>) -> Result<()> {
        let n = self.topology.real_len();
        if mean.len() != n || std.len() != n || std.iter().any(|&s| !(s > 0.0)) {
            return Err(shape_err("input statistics do not match the topology"));
        }
        self.input_mean = mean;
        self.input_std = std;
        Ok(())
    }

    fn standardize(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.to_owned();
        let r = self.topology.real_len();
        for mut row in z.rows_mut() {
            for c in 0..r {
                row[c] = (row[c] - self.input_mean[c]) / self.input_std[c];
            }
        }
        z
    }

    fn batch_norm(&mut self, idx: usize, prefix: &str, x: &Array2<f64>, mode: Mode) -> BnCache {
        let gamma = self.vec1(&format!("{prefix}.bn.gamma")).to_owned();
        let beta = self.vec1(&format!("{prefix}.bn.beta")).to_owned();
        let (mean, var) = match mode {
            Mode::Train { .. } => {
                let mean = x.mean_axis(Axis(0)).unwrap();
                let var = x.var_axis(Axis(0), 0.0);
                let (rm, rv) = &mut self.bn_running[idx];
                for j in 0..mean.len() {
                    rm[j] = (1.0 - BN_MOMENTUM) * rm[j] + BN_MOMENTUM * mean[j];
                    rv[j] = (1.0 - BN_MOMENTUM) * rv[j] + BN_MOMENTUM * var[j];
                }
                (mean, var)
            }
            Mode::Eval => {
                let (rm, rv) = &self.bn_running[idx];
                (Array1::from(rm.clone()), Array1::from(rv.clone()))
            }
        };
        let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
        let xhat = (x - &mean) * &inv_std;
        let out = &xhat * &gamma + &beta;
        BnCache { xhat, inv_std, out }
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.topology.input_len() {
            return Err(shape_err(format!(
                "feature length {} does not match topology input {}",
                x.ncols(),
                self.topology.input_len()
            )));
        }
        if x.nrows() == 0 {
            return Err(shape_err("empty batch"));
        }
        Ok(())
    }

    /// Forward pass. Training mode updates batch-norm running statistics
    /// and keeps a cache for [`NeuralModel::backward`].
    pub fn forward_train(&mut self, x: ArrayView2<f64>, seed: u64) -> Result<ForwardOutput> {
        self.forward_impl(x, Mode::Train { seed })
    }

    /// Deterministic inference: running statistics, no dropout.
    pub fn forward_eval(&self, x: ArrayView2<f64>) -> Result<ForwardOutput> {
        // Eval never mutates; run on a scratch copy of the running stats.
        let mut scratch = EvalView(self);
        scratch.run(x)
    }

    fn forward_impl(&mut self, x: ArrayView2<f64>, mode: Mode) -> Result<ForwardOutput> {
        self.check_input(&x)?;
        let topo = self.topology;
        let xs = self.standardize(x);
        let mut h = xs.dot(&self.tensor("in.w")) + &self.vec1("in.b");
        let mut bns = Vec::with_capacity(topo.blocks + 1);
        let mut masks = Vec::with_capacity(topo.blocks);
        let mut posts = Vec::with_capacity(topo.blocks);
        let mut rng = match mode {
            Mode::Train { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            Mode::Eval => None,
        };
        for k in 0..topo.blocks {
            let bn = self.batch_norm(k, &format!("block{k}"), &h, mode);
            let mut a = bn.out.mapv(|v| v.max(0.0));
            let mask = match (&mut rng, self.dropout > 0.0) {
                (Some(r), true) => {
                    let keep = 1.0 - self.dropout;
                    let m = Array2::from_shape_simple_fn(a.raw_dim(), || {
                        if r.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    });
                    a *= &m;
                    Some(m)
                }
                _ => None,
            };
            let z = a.dot(&self.tensor(&format!("block{k}.w"))) + &self.vec1(&format!("block{k}.b"));
            h = &h + &z;
            bns.push(bn);
            masks.push(mask);
            posts.push(a);
        }
        let bn = self.batch_norm(topo.blocks, "head", &h, mode);
        let r = bn.out.mapv(|v| v.max(0.0));
        let ext = r.dot(&self.tensor("out.w")) + &self.vec1("out.b");
        bns.push(bn);
        let app = self.app_from(&ext, &x);
        let cache = match mode {
            Mode::Train { .. } => Some(Cache {
                x: xs,
                bn: bns,
                masks,
                post: posts,
                head_relu: r,
            }),
            Mode::Eval => None,
        };
        Ok(ForwardOutput { ext, app, cache })
    }

    fn app_from(&self, ext: &Array2<f64>, x: &ArrayView2<f64>) -> Array2<f64> {
        match self.topology.head {
            HeadKind::Bits => ext + &x.slice(s![.., self.topology.target_apr_cols()]),
            HeadKind::Symbols => ext.clone(),
        }
    }

    /// Gradient of the loss with respect to every parameter, given the loss
    /// gradient `d_ext` with respect to the EXT output.
    pub fn backward(&self, cache: &Cache, d_ext: &Array2<f64>) -> Result<Vec<f64>> {
        let topo = self.topology;
        if d_ext.nrows() != cache.x.nrows() || d_ext.ncols() != topo.output_len() {
            return Err(shape_err("output gradient has the wrong shape"));
        }
        let mut grad = vec![0.0; self.layout.total];
        let mut put = |name: &str, g: Array2<f64>| {
            let t = self.layout.slot(name);
            for (dst, v) in grad[t.range()].iter_mut().zip(g.iter()) {
                *dst += v;
            }
        };
        let sum_rows = |a: &Array2<f64>| a.sum_axis(Axis(0)).insert_axis(Axis(0));

        put("out.w", cache.head_relu.t().dot(d_ext));
        put("out.b", sum_rows(d_ext));
        let head_bn = &cache.bn[topo.blocks];
        let mut d_u = d_ext.dot(&self.tensor("out.w").t());
        d_u.zip_mut_with(&head_bn.out, |d, &u| {
            if u <= 0.0 {
                *d = 0.0
            }
        });
        let (d_h, dg, db) = self.bn_backward(head_bn, &d_u, "head");
        put("head.bn.gamma", dg);
        put("head.bn.beta", db);
        let mut d_h = d_h;
        for k in (0..topo.blocks).rev() {
            // h_{k+1} = h_k + a_k W_k + b_k
            put(&format!("block{k}.w"), cache.post[k].t().dot(&d_h));
            put(&format!("block{k}.b"), sum_rows(&d_h));
            let mut d_a = d_h.dot(&self.tensor(&format!("block{k}.w")).t());
            if let Some(m) = &cache.masks[k] {
                d_a *= m;
            }
            let bn = &cache.bn[k];
            d_a.zip_mut_with(&bn.out, |d, &u| {
                if u <= 0.0 {
                    *d = 0.0
                }
            });
            let (d_in, dg, db) = self.bn_backward(bn, &d_a, &format!("block{k}"));
            put(&format!("block{k}.bn.gamma"), dg);
            put(&format!("block{k}.bn.beta"), db);
            d_h = d_h + d_in;
        }
        put("in.w", cache.x.t().dot(&d_h));
        put("in.b", sum_rows(&d_h));
        Ok(grad)
    }

    fn bn_backward(
        &self,
        bn: &BnCache,
        d_out: &Array2<f64>,
        prefix: &str,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let n = d_out.nrows() as f64;
        let gamma = self.vec1(&format!("{prefix}.bn.gamma"));
        let d_gamma = (d_out * &bn.xhat).sum_axis(Axis(0));
        let d_beta = d_out.sum_axis(Axis(0));
        let d_xhat = d_out * &gamma;
        let s1 = d_xhat.sum_axis(Axis(0));
        let s2 = (&d_xhat * &bn.xhat).sum_axis(Axis(0));
        let d_x = (&d_xhat * n - &s1 - &bn.xhat * &s2) * &(&bn.inv_std / n);
        (
            d_x,
            d_gamma.insert_axis(Axis(0)),
            d_beta.insert_axis(Axis(0)),
        )
    }

    /// Eval-mode forward in row chunks, parallel under [`crate::Exec::Parallel`].
    /// Rows are independent in eval mode, so the result does not depend on
    /// the chunking.
    pub fn forward_eval_batched(
        &self,
        x: ArrayView2<f64>,
        chunk: usize,
        exec: crate::Exec,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        self.check_input(&x)?;
        let chunk = chunk.max(1);
        let n = x.nrows();
        let parts = n.div_ceil(chunk);
        let outs: Result<Vec<ForwardOutput>> = exec
            .map(parts, |p| {
                let lo = p * chunk;
                let hi = (lo + chunk).min(n);
                self.forward_eval(x.slice(s![lo..hi, ..]))
            })
            .into_iter()
            .collect();
        let outs = outs?;
        let ext_views: Vec<_> = outs.iter().map(|o| o.ext.view()).collect();
        let app_views: Vec<_> = outs.iter().map(|o| o.app.view()).collect();
        Ok((
            ndarray::concatenate(Axis(0), &ext_views).map_err(|e| shape_err(e.to_string()))?,
            ndarray::concatenate(Axis(0), &app_views).map_err(|e| shape_err(e.to_string()))?,
        ))
    }

    pub(crate) fn rebuild_layout(&mut self) {
        self.layout = Layout::new(&self.topology);
    }
}

/// Read-only evaluator sharing the model's parameters.
struct EvalView<'a>(&'a NeuralModel);

impl EvalView<'_> {
    fn run(&mut self, x: ArrayView2<f64>) -> Result<ForwardOutput> {
        let m = self.0;
        m.check_input(&x)?;
        let topo = m.topology;
        let bn = |idx: usize, prefix: &str, h: &Array2<f64>| -> Array2<f64> {
            let (rm, rv) = &m.bn_running[idx];
            let gamma = m.vec1(&format!("{prefix}.bn.gamma"));
            let beta = m.vec1(&format!("{prefix}.bn.beta"));
            let mut out = h.clone();
            for mut row in out.rows_mut() {
                for j in 0..row.len() {
                    row[j] = (row[j] - rm[j]) / (rv[j] + BN_EPS).sqrt() * gamma[j] + beta[j];
                }
            }
            out
        };
        let xs = m.standardize(x);
        let mut h = xs.dot(&m.tensor("in.w")) + &m.vec1("in.b");
        for k in 0..topo.blocks {
            let a = bn(k, &format!("block{k}"), &h).mapv(|v| v.max(0.0));
            h = h + a.dot(&m.tensor(&format!("block{k}.w"))) + &m.vec1(&format!("block{k}.b"));
        }
        let r = bn(topo.blocks, "head", &h).mapv(|v| v.max(0.0));
        let ext = r.dot(&m.tensor("out.w")) + &m.vec1("out.b");
        let app = m.app_from(&ext, &x);
        Ok(ForwardOutput {
            ext,
            app,
            cache: None,
        })
    }
}
