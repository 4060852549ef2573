use super::ExitCurve;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// `c0 + c1·x + c2·x² + c3·x³` fitted on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicModel {
    pub coeffs: [f64; 4],
    pub max_residual: f64,
}

impl CubicModel {
    pub fn eval(&self, x: f64) -> f64 {
        let c = &self.coeffs;
        ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
    }

    /// Evaluation clamped to a valid mutual information.
    pub fn eval_clamped(&self, x: f64) -> f64 {
        self.eval(x).clamp(0.0, 1.0)
    }

    /// Shifts the curve by `offset`, for sensitivity probes.
    pub fn raised(&self, offset: f64) -> Self {
        let mut c = *self;
        c.coeffs[0] += offset;
        c
    }
}

/// Least-squares polynomial of `degree`; returns coefficients (ascending)
/// and the largest absolute residual.
pub fn fit_polynomial(xs: &[f64], ys: &[f64], degree: usize) -> Result<(Vec<f64>, f64)> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::InputShape(format!("{n} inputs and {} outputs", ys.len())));
    }
    if n < degree + 1 {
        return Err(Error::Numeric(format!(
            "{n} samples cannot determine a degree-{degree} polynomial"
        )));
    }
    let a = DMatrix::from_fn(n, degree + 1, |i, j| xs[i].powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::Numeric("rank-deficient polynomial fit".into()));
    }
    let coef = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::Numeric(e.to_string()))?;
    let resid = &a * &coef - &b;
    let max_res = resid.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok((coef.iter().copied().collect(), max_res))
}

pub fn fit_cubic(curve: &ExitCurve) -> Result<CubicModel> {
    let (c, r) = fit_polynomial(&curve.inputs(), &curve.outputs(), 3)?;
    Ok(CubicModel {
        coeffs: [c[0], c[1], c[2], c[3]],
        max_residual: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_cubic_recovered() {
        let truth = [0.12, 0.4, -0.3, 0.25];
        let f = |x: f64| truth[0] + truth[1] * x + truth[2] * x * x + truth[3] * x * x * x;
        let curve = ExitCurve::from_fn(21, "c", f).unwrap();
        let m = fit_cubic(&curve).unwrap();
        for (a, b) in m.coeffs.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(m.max_residual < 1e-12);
    }

    #[test]
    fn residual_shrinks_with_degree() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin() * 0.3 + 0.4).collect();
        let sse = |d: usize| {
            let (c, _) = fit_polynomial(&xs, &ys, d).unwrap();
            xs.iter()
                .zip(&ys)
                .map(|(x, y)| {
                    let p: f64 = c.iter().enumerate().map(|(k, ck)| ck * x.powi(k as i32)).sum();
                    (p - y).powi(2)
                })
                .sum::<f64>()
        };
        assert!(sse(2) <= sse(1) + 1e-15);
        assert!(sse(3) <= sse(2) + 1e-15);
    }

    #[test]
    fn rank_deficiency_detected() {
        assert!(fit_polynomial(&[0.5; 10], &[0.1; 10], 3).is_err());
        assert!(fit_polynomial(&[0.0, 0.5, 1.0], &[0.0; 3], 3).is_err());
    }
}
