//! Transmitter chain and reference demapper.

mod demap;
mod mapping;
mod pulse;
mod wdm;

pub use demap::{exact_llr_demap, hard_demap};
pub use mapping::{gray_map, ModFormat};
pub use pulse::{
    raised_cosine_spectrum, rrc_energy_fraction, rrc_filter, rrc_impulse, rrc_shape, rrc_taps,
};
pub use wdm::{wdm_demux_center, wdm_mux};

use crate::error::{shape_err, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Coded bits in transmission order, `bits_per_symbol` per DP symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitFrame {
    bits: Vec<u8>,
    bits_per_symbol: usize,
}

impl BitFrame {
    pub fn new(bits: Vec<u8>, bits_per_symbol: usize) -> Result<Self> {
        if bits_per_symbol == 0 || bits.len() % bits_per_symbol != 0 {
            return Err(shape_err(format!(
                "{} bits is not a multiple of {} bits per symbol",
                bits.len(),
                bits_per_symbol
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(shape_err("bit values must be 0 or 1"));
        }
        Ok(Self {
            bits,
            bits_per_symbol,
        })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn symbols(&self) -> usize {
        self.bits.len() / self.bits_per_symbol
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bits of DP symbol `i`.
    pub fn symbol_bits(&self, i: usize) -> &[u8] {
        &self.bits[i * self.bits_per_symbol..(i + 1) * self.bits_per_symbol]
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }
}

/// Dual-polarization symbol sequences at one sample per symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolFrame {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    /// Symbol rate in Hz.
    pub baud: f64,
}

impl SymbolFrame {
    pub fn new(x: Vec<Complex64>, y: Vec<Complex64>, baud: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(shape_err(format!(
                "polarization lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        Ok(Self { x, y, baud })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn pol(&self, p: usize) -> &[Complex64] {
        if p == 0 {
            &self.x
        } else {
            &self.y
        }
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self {
            x: self.x.iter().map(|v| v * a).collect(),
            y: self.y.iter().map(|v| v * a).collect(),
            baud: self.baud,
        }
    }
}

/// Sampled complex baseband field on two polarizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPolWaveform {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    /// Sample rate in Hz.
    pub fs: f64,
    pub f_center_offset: f64,
}

impl DualPolWaveform {
    pub fn new(x: Vec<Complex64>, y: Vec<Complex64>, fs: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(shape_err(format!(
                "polarization lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if !(fs > 0.0) {
            return Err(crate::error::domain_err("sample rate must be positive"));
        }
        Ok(Self {
            x,
            y,
            fs,
            f_center_offset: 0.0,
        })
    }

    pub fn zeros(len: usize, fs: f64) -> Self {
        Self {
            x: vec![Complex64::new(0.0, 0.0); len],
            y: vec![Complex64::new(0.0, 0.0); len],
            fs,
            f_center_offset: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean total power |Ex|² + |Ey|² in W.
    pub fn power(&self) -> f64 {
        crate::dsp::mean_power(&self.x) + crate::dsp::mean_power(&self.y)
    }

    /// Sum of |Ex|² + |Ey|² over all samples.
    pub fn energy(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .map(|v| v.norm_sqr())
            .sum()
    }

    pub fn scale(&mut self, a: f64) {
        self.x.iter_mut().chain(self.y.iter_mut()).for_each(|v| *v *= a);
    }

    pub fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain(&self.y)
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Largest sample-wise difference relative to the largest magnitude of `other`.
    pub fn max_relative_diff(&self, other: &Self) -> f64 {
        let scale = other
            .x
            .iter()
            .chain(&other.y)
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        let d = self
            .x
            .iter()
            .zip(&other.x)
            .chain(self.y.iter().zip(&other.y))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            d
        } else {
            d / scale
        }
    }
}
