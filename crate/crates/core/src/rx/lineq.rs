use crate::error::{shape_err, Error, Result};
use crate::signal::SymbolFrame;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const RIDGE: f64 = 1e-9;

/// 2×2 butterfly FIR equalizer at one sample per symbol.
///
/// `taps[out][input][t]` multiplies `input[k + t - center]` for output
/// symbol `k`; indices wrap around the block.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEq {
    pub taps: [[Vec<Complex64>; 2]; 2],
    pub tap_count: usize,
    pub trained: bool,
    /// Mean squared error per polarization on the training data.
    pub fit_mse: [f64; 2],
}

impl LinearEq {
    pub fn untrained(tap_count: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); tap_count];
        Self {
            taps: [[z.clone(), z.clone()], [z.clone(), z]],
            tap_count,
            trained: false,
            fit_mse: [f64::NAN; 2],
        }
    }

    pub fn center(&self) -> usize {
        self.tap_count / 2
    }
}

fn regressor(rx: &SymbolFrame, k: usize, taps: usize, out: &mut [Complex64]) {
    let n = rx.len() as i64;
    let c = (taps / 2) as i64;
    for (q, pol) in [&rx.x, &rx.y].into_iter().enumerate() {
        for t in 0..taps {
            let idx = (k as i64 + t as i64 - c).rem_euclid(n) as usize;
            out[q * taps + t] = pol[idx];
        }
    }
}

/// Least-squares fit of the butterfly taps against an aligned reference.
pub fn ls_equalizer_fit(rx: &SymbolFrame, reference: &SymbolFrame, tap_count: usize) -> Result<LinearEq> {
    if tap_count == 0 || tap_count % 2 == 0 {
        return Err(shape_err(format!("tap count must be odd, got {tap_count}")));
    }
    if rx.len() != reference.len() {
        return Err(shape_err("received and reference frames differ in length"));
    }
    let dim = 2 * tap_count;
    if rx.len() < 2 * dim {
        return Err(shape_err(format!(
            "{} training symbols are too few for {dim} unknowns",
            rx.len()
        )));
    }
    // Normal equations A w = b_p with A = Zᴴ Z shared by both outputs.
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    let mut b = [DVector::<Complex64>::zeros(dim), DVector::<Complex64>::zeros(dim)];
    let mut z = vec![Complex64::new(0.0, 0.0); dim];
    for k in 0..rx.len() {
        regressor(rx, k, tap_count, &mut z);
        for i in 0..dim {
            let zi = z[i].conj();
            for j in i..dim {
                a[(i, j)] += zi * z[j];
            }
            b[0][i] += zi * reference.x[k];
            b[1][i] += zi * reference.y[k];
        }
    }
    for i in 0..dim {
        for j in 0..i {
            a[(i, j)] = a[(j, i)].conj();
        }
    }
    let chol = match a.clone().cholesky() {
        Some(c) => c,
        None => {
            let scale = (0..dim).map(|i| a[(i, i)].re).sum::<f64>() / dim as f64;
            log::warn!("singular normal matrix in LS equalizer fit, adding ridge {RIDGE:e}");
            let mut reg = a.clone();
            for i in 0..dim {
                reg[(i, i)] += Complex64::new(RIDGE * scale.max(1e-300), 0.0);
            }
            reg.cholesky()
                .ok_or_else(|| Error::Numeric("regularized normal matrix is not positive definite".into()))?
        }
    };
    let mut eq = LinearEq::untrained(tap_count);
    for p in 0..2 {
        let w = chol.solve(&b[p]);
        for q in 0..2 {
            for t in 0..tap_count {
                eq.taps[p][q][t] = w[q * tap_count + t];
            }
        }
    }
    eq.trained = true;
    let out = ls_equalizer_apply(&eq, rx)?;
    for (p, (o, r)) in [(&out.x, &reference.x), (&out.y, &reference.y)].into_iter().enumerate() {
        eq.fit_mse[p] = o.iter().zip(r).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>() / o.len() as f64;
    }
    Ok(eq)
}

/// Applies a fitted equalizer; the output is aligned with the input.
pub fn ls_equalizer_apply(eq: &LinearEq, rx: &SymbolFrame) -> Result<SymbolFrame> {
    if !eq.trained {
        return Err(Error::State("equalizer has not been fitted".into()));
    }
    let t = eq.tap_count;
    let mut z = vec![Complex64::new(0.0, 0.0); 2 * t];
    let mut x = Vec::with_capacity(rx.len());
    let mut y = Vec::with_capacity(rx.len());
    for k in 0..rx.len() {
        regressor(rx, k, t, &mut z);
        for (p, out) in [&mut x, &mut y].into_iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for q in 0..2 {
                for (w, v) in eq.taps[p][q].iter().zip(&z[q * t..(q + 1) * t]) {
                    acc += w * v;
                }
            }
            out.push(acc);
        }
    }
    SymbolFrame::new(x, y, rx.baud)
}
