//! Sliding windows of equalized DP symbols with their a-priori LLRs.

use crate::error::{shape_err, Result};
use crate::signal::{BitFrame, SymbolFrame};
use ndarray::{Array2, ArrayViewMut1};

/// One network input: `4W` reals followed by `2m·W` a-priori LLRs.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFeature {
    pub reals: Vec<f64>,
    pub apr: Vec<f64>,
    pub target_index: usize,
}

/// Windowed view of an equalized symbol stream and its transmitted bits.
/// Windows wrap around the ends of the block.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    /// `(xI, xQ, yI, yQ)` per symbol.
    symbols: Vec<[f64; 4]>,
    bits: Vec<u8>,
    bits_per_symbol: usize,
    window: usize,
}

impl WindowSet {
    pub fn new(eq: &SymbolFrame, bits: &BitFrame, window: usize) -> Result<Self> {
        if window == 0 || window % 2 == 0 {
            return Err(shape_err(format!("window {window} must be odd")));
        }
        if bits.symbols() != eq.len() {
            return Err(shape_err(format!(
                "{} symbols but bits for {}",
                eq.len(),
                bits.symbols()
            )));
        }
        if eq.is_empty() {
            return Err(shape_err("empty symbol stream"));
        }
        let symbols = eq
            .x
            .iter()
            .zip(&eq.y)
            .map(|(x, y)| [x.re, x.im, y.re, y.im])
            .collect();
        Ok(Self {
            symbols,
            bits: bits.bits().to_vec(),
            bits_per_symbol: bits.bits_per_symbol(),
            window,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn target_bits(&self, i: usize) -> &[u8] {
        &self.bits[i * self.bits_per_symbol..(i + 1) * self.bits_per_symbol]
    }

    pub fn feature_len(&self) -> usize {
        (4 + self.bits_per_symbol) * self.window
    }

    fn wrap(&self, i: usize, k: usize) -> usize {
        let n = self.len() as isize;
        let h = (self.window / 2) as isize;
        (i as isize + k as isize - h).rem_euclid(n) as usize
    }

    /// Feature of symbol `i` with a-priori LLRs from `apr_stream` (one per
    /// bit of the whole block, in bit order).
    pub fn feature(&self, i: usize, apr_stream: &[f64]) -> WindowFeature {
        let mut row = vec![0.0; self.feature_len()];
        self.fill_row(i, ndarray::ArrayViewMut1::from(&mut row[..]), |j, out| {
            let b = self.bits_per_symbol;
            out.copy_from_slice(&apr_stream[j * b..(j + 1) * b]);
        });
        let split = 4 * self.window;
        WindowFeature {
            reals: row[..split].to_vec(),
            apr: row[split..].to_vec(),
            target_index: i,
        }
    }

    fn fill_row(&self, i: usize, mut row: ArrayViewMut1<f64>, apr: impl Fn(usize, &mut [f64])) {
        let b = self.bits_per_symbol;
        let split = 4 * self.window;
        let mut tmp = vec![0.0; b];
        for k in 0..self.window {
            let j = self.wrap(i, k);
            for c in 0..4 {
                row[4 * k + c] = self.symbols[j][c];
            }
            apr(j, &mut tmp);
            for c in 0..b {
                row[split + b * k + c] = tmp[c];
            }
        }
    }

    /// Input matrix for `rows`, a-priori LLRs taken from a block-wide stream.
    pub fn batch_from_stream(&self, rows: &[usize], apr_stream: &[f64]) -> Result<Array2<f64>> {
        if apr_stream.len() != self.bits.len() {
            return Err(shape_err(format!(
                "{} a-priori LLRs for {} bits",
                apr_stream.len(),
                self.bits.len()
            )));
        }
        let b = self.bits_per_symbol;
        let mut x = Array2::zeros((rows.len(), self.feature_len()));
        for (r, &i) in rows.iter().enumerate() {
            self.fill_row(i, x.row_mut(r), |j, out| {
                out.copy_from_slice(&apr_stream[j * b..(j + 1) * b])
            });
        }
        Ok(x)
    }

    /// Input matrix with a-priori LLRs supplied per window position: `apr`
    /// holds `2m·W` values per row, laid out like the feature tail.
    pub fn batch_with_apr(&self, rows: &[usize], apr: Option<&Array2<f64>>) -> Result<Array2<f64>> {
        let split = 4 * self.window;
        if let Some(a) = apr {
            if a.nrows() != rows.len() || a.ncols() != self.feature_len() - split {
                return Err(shape_err("a-priori block has the wrong shape"));
            }
        }
        let mut x = Array2::zeros((rows.len(), self.feature_len()));
        for (r, &i) in rows.iter().enumerate() {
            self.fill_row(i, x.row_mut(r), |_, out| out.fill(0.0));
            if let Some(a) = apr {
                x.row_mut(r)
                    .slice_mut(ndarray::s![split..])
                    .assign(&a.row(r));
            }
        }
        Ok(x)
    }

    /// Bits of every window position for `rows`, laid out like the APR tail.
    pub fn window_bits(&self, rows: &[usize]) -> Vec<u8> {
        let b = self.bits_per_symbol;
        let mut out = Vec::with_capacity(rows.len() * b * self.window);
        for &i in rows {
            for k in 0..self.window {
                let j = self.wrap(i, k);
                out.extend_from_slice(&self.bits[j * b..(j + 1) * b]);
            }
        }
        out
    }

    /// Target bits of `rows`, concatenated.
    pub fn rows_bits(&self, rows: &[usize]) -> Vec<u8> {
        rows.iter().flat_map(|&i| self.target_bits(i).iter().copied()).collect()
    }

    /// Per-column mean and standard deviation of the real features.
    pub fn real_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len() as f64;
        let mut mean = [0.0; 4];
        let mut sq = [0.0; 4];
        for s in &self.symbols {
            for c in 0..4 {
                mean[c] += s[c];
                sq[c] += s[c] * s[c];
            }
        }
        let mut m = Vec::with_capacity(4 * self.window);
        let mut sd = Vec::with_capacity(4 * self.window);
        for _ in 0..self.window {
            for c in 0..4 {
                let mu = mean[c] / n;
                let var = (sq[c] / n - mu * mu).max(0.0);
                m.push(mu);
                sd.push(if var > 1e-24 { var.sqrt() } else { 1.0 });
            }
        }
        (m, sd)
    }
}
