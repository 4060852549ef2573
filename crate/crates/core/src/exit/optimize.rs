//! Rate maximization over triple-degree, check-concentrated distributions.
//!
//! For fixed variable degrees and fractions the combined VND curve does not
//! depend on the check side, so the largest feasible average check degree
//! is found by bisection and maps directly to the design rate.

use super::charts::{combined_chart, tunnel_open, TUNNEL_DELTA, TRAJECTORY_EPS};
use super::curve::unit_grid;
use super::{j_function, j_inverse};
use crate::error::{Error, Result};
use crate::ldpc::DegreeDistribution;
use crate::par::Exec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub d2_candidates: Vec<usize>,
    pub d3_candidates: Vec<usize>,
    pub fraction_step: f64,
    pub refine_step: f64,
    pub delta: f64,
    pub grid_points: usize,
    pub max_check_degree: f64,
    /// Variable side of a reference distribution, always evaluated.
    pub baseline: Option<Vec<(usize, f64)>>,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        Self {
            d2_candidates: (3..=15).collect(),
            d3_candidates: (16..=40).collect(),
            fraction_step: 0.05,
            refine_step: 0.01,
            delta: TUNNEL_DELTA,
            grid_points: 101,
            max_check_degree: 200.0,
            baseline: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedCode {
    pub dist: DegreeDistribution,
    pub rate: f64,
    pub mean_check_degree: f64,
    /// Best rate found for the baseline variable side, if one was given
    /// and it is feasible.
    pub baseline_rate: Option<f64>,
    pub candidates_evaluated: usize,
}

struct Evaluator<'a> {
    det: &'a (dyn Fn(f64) -> f64 + Sync),
    grid: Vec<f64>,
    sigma_a: Vec<f64>,
    spec: &'a OptimizerSpec,
}

impl<'a> Evaluator<'a> {
    fn new(det: &'a (dyn Fn(f64) -> f64 + Sync), spec: &'a OptimizerSpec) -> Self {
        let grid = unit_grid(spec.grid_points);
        let sigma_a = grid.iter().map(|&x| j_inverse(x)).collect();
        Self {
            det,
            grid,
            sigma_a,
            spec,
        }
    }

    /// Largest feasible average check degree for the variable side `var`
    /// (node fractions), with the rate it implies.
    fn best_check_degree(&self, var: &[(usize, f64)]) -> Option<(f64, f64)> {
        let mean_v: f64 = var.iter().map(|(d, f)| *d as f64 * f).sum();
        let edge: Vec<(usize, f64)> = var
            .iter()
            .map(|&(d, f)| (d, d as f64 * f / mean_v))
            .collect();
        // Per grid point: x, and J⁻¹(1 − (VND(x) − δ)) for the CND test.
        let mut need: Vec<(f64, f64)> = Vec::with_capacity(self.grid.len());
        for (&x, &sa) in self.grid.iter().zip(&self.sigma_a) {
            let i_det_in: f64 = var
                .iter()
                .map(|&(d, f)| f * j_function((d as f64).sqrt() * sa))
                .sum();
            let sc = j_inverse((self.det)(i_det_in).clamp(0.0, 1.0));
            let y: f64 = edge
                .iter()
                .map(|&(d, w)| {
                    let a = if d > 1 { (d - 1) as f64 * sa * sa } else { 0.0 };
                    w * j_function((a + sc * sc).sqrt())
                })
                .sum();
            if y >= 1.0 - TRAJECTORY_EPS {
                continue;
            }
            need.push((x, j_inverse(1.0 - (y - self.spec.delta).max(0.0))));
        }
        let feasible = |dc: f64| -> bool {
            let lo = dc.floor();
            let a = lo + 1.0 - dc; // node fraction at degree `lo`
            let (w_lo, w_hi) = (a * lo / dc, (1.0 - a) * (lo + 1.0) / dc);
            let (s_lo, s_hi) = ((lo - 1.0).max(0.0).sqrt(), lo.sqrt());
            need.iter().all(|&(x, t)| {
                let c = w_lo * (1.0 - j_function(s_lo * t)) + w_hi * (1.0 - j_function(s_hi * t));
                c >= x
            })
        };
        let lo_dc = (mean_v + 1e-6).max(2.0);
        if !feasible(lo_dc) {
            return None;
        }
        let (mut lo, mut hi) = (lo_dc, self.spec.max_check_degree);
        if feasible(hi) {
            lo = hi;
        } else {
            while hi - lo > 1e-6 {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        Some((lo, 1.0 - mean_v / lo))
    }
}

fn simplex(step: f64) -> Vec<[f64; 3]> {
    let n = (1.0 / step).round() as usize;
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=n - i {
            let f1 = i as f64 / n as f64;
            let f2 = j as f64 / n as f64;
            out.push([f1, f2, (1.0 - f1 - f2).max(0.0)]);
        }
    }
    out
}

fn var_side(d: [usize; 3], f: [f64; 3]) -> Option<Vec<(usize, f64)>> {
    let mut v: Vec<(usize, f64)> = d
        .iter()
        .zip(&f)
        .filter(|(_, &x)| x > 1e-12)
        .map(|(&d, &x)| (d, x))
        .collect();
    let s: f64 = v.iter().map(|(_, x)| x).sum();
    if v.is_empty() || (s - 1.0).abs() > 1e-9 {
        return None;
    }
    // Renormalize so the fractions sum to one in floating point.
    let last = v.len() - 1;
    let head: f64 = v[..last].iter().map(|(_, x)| x).sum();
    v[last].1 = 1.0 - head;
    Some(v)
}

/// Best (rate, check degree, variable side) for a degree triple over a
/// fraction grid.
type Best = (f64, f64, Vec<(usize, f64)>);

fn search_triple(ev: &Evaluator, d: [usize; 3], fracs: &[[f64; 3]]) -> (Option<Best>, usize) {
    let mut best: Option<Best> = None;
    let mut count = 0;
    for f in fracs {
        let Some(var) = var_side(d, *f) else { continue };
        count += 1;
        if let Some((dc, rate)) = ev.best_check_degree(&var) {
            if best.as_ref().is_none_or(|b| rate > b.0) {
                best = Some((rate, dc, var));
            }
        }
    }
    (best, count)
}

/// Maximizes the design rate over `{2, d2, d3}` variable degrees and a
/// check-concentrated check side, subject to an open tunnel with margin
/// `spec.delta` against `detector`.
pub fn optimize_degrees(
    detector: &(dyn Fn(f64) -> f64 + Sync),
    spec: &OptimizerSpec,
    exec: Exec,
) -> Result<OptimizedCode> {
    if spec.d2_candidates.is_empty() || spec.d3_candidates.is_empty() {
        return Err(Error::Config("empty degree candidate set".into()));
    }
    if !(spec.fraction_step > 0.0 && spec.fraction_step <= 0.5) {
        return Err(Error::Config("fraction step must be in (0, 0.5]".into()));
    }
    let ev = Evaluator::new(detector, spec);
    let fracs = simplex(spec.fraction_step);
    let mut triples = Vec::new();
    for &d2 in &spec.d2_candidates {
        for &d3 in &spec.d3_candidates {
            if 2 < d2 && d2 < d3 {
                triples.push([2, d2, d3]);
            }
        }
    }
    let results = exec.map_slice(&triples, |&d| (d, search_triple(&ev, d, &fracs)));
    let mut evaluated = 0;
    let mut best: Option<(Best, [usize; 3])> = None;
    for (d, (b, n)) in results {
        evaluated += n;
        if let Some(b) = b {
            if best.as_ref().is_none_or(|(cur, _)| b.0 > cur.0) {
                best = Some((b, d));
            }
        }
    }
    // Local refinement around the coarse optimum.
    if let Some(((_, _, var), d)) = best.clone() {
        let f0: Vec<f64> = d
            .iter()
            .map(|dd| var.iter().find(|(x, _)| x == dd).map(|(_, f)| *f).unwrap_or(0.0))
            .collect();
        let r = spec.fraction_step;
        let fine: Vec<[f64; 3]> = simplex(spec.refine_step)
            .into_iter()
            .filter(|f| (f[0] - f0[0]).abs() <= r + 1e-9 && (f[1] - f0[1]).abs() <= r + 1e-9)
            .collect();
        let (b, n) = search_triple(&ev, d, &fine);
        evaluated += n;
        if let Some(b) = b {
            if b.0 > best.as_ref().unwrap().0 .0 {
                best = Some((b, d));
            }
        }
    }
    let baseline = spec.baseline.as_ref().and_then(|v| {
        evaluated += 1;
        ev.best_check_degree(v).map(|(dc, rate)| (rate, dc, v.clone()))
    });
    let baseline_rate = baseline.as_ref().map(|b| b.0);
    let chosen = match (best.map(|b| b.0), baseline) {
        (Some(a), Some(b)) => {
            if b.0 > a.0 {
                b
            } else {
                a
            }
        }
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => {
            return Err(Error::Infeasible(
                "no candidate distribution keeps the tunnel open".into(),
            ))
        }
    };
    let (_, dc, var) = chosen;
    let dist = DegreeDistribution::check_concentrated(var, dc)?;
    let rate = crate::ldpc::design_rate(&dist)?;
    let chart = combined_chart(detector, &dist, spec.grid_points, None)?;
    if !tunnel_open(&chart, spec.delta) {
        return Err(Error::Numeric(
            "optimized distribution failed tunnel re-verification".into(),
        ));
    }
    Ok(OptimizedCode {
        dist,
        rate,
        mean_check_degree: dc,
        baseline_rate,
        candidates_evaluated: evaluated,
    })
}

/// Largest feasible check-concentrated rate for a fixed variable side.
pub fn max_rate_for(
    detector: &(dyn Fn(f64) -> f64 + Sync),
    var: &[(usize, f64)],
    spec: &OptimizerSpec,
) -> Option<(DegreeDistribution, f64)> {
    let ev = Evaluator::new(detector, spec);
    let (dc, _) = ev.best_check_degree(var)?;
    let dist = DegreeDistribution::check_concentrated(var.to_vec(), dc).ok()?;
    let rate = crate::ldpc::design_rate(&dist).ok()?;
    Some((dist, rate))
}
