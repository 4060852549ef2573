//! Analytic decoder curves, the combined detector/VND chart and the
//! staircase trajectory between it and the check-node curve.

use super::curve::{interp, unit_grid};
use super::{j_function, j_inverse};
use crate::error::{domain_err, Result};
use crate::ldpc::DegreeDistribution;

fn unit(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(domain_err(format!("{what} = {x} outside [0, 1]")))
    }
}

fn vnd_sigma(dv: usize, sigma_a: f64, sigma_ch: f64) -> f64 {
    let a = if dv > 1 {
        (dv - 1) as f64 * sigma_a * sigma_a
    } else {
        0.0
    };
    (a + sigma_ch * sigma_ch).sqrt()
}

/// `J(√((dv−1)·J⁻¹(I_A)² + J⁻¹(I_ch)²))`.
pub fn vnd_curve(dv: usize, i_a: f64, i_ch: f64) -> Result<f64> {
    if dv == 0 {
        return Err(domain_err("variable degree must be at least 1"));
    }
    unit(i_a, "I_A")?;
    unit(i_ch, "I_ch")?;
    if dv == 1 {
        return Ok(i_ch);
    }
    Ok(j_function(vnd_sigma(dv, j_inverse(i_a), j_inverse(i_ch))))
}

/// `1 − J(√(dc−1)·J⁻¹(1 − I_A))`.
pub fn cnd_curve(dc: usize, i_a: f64) -> Result<f64> {
    if dc == 0 {
        return Err(domain_err("check degree must be at least 1"));
    }
    unit(i_a, "I_A")?;
    Ok(1.0 - j_function(((dc - 1) as f64).sqrt() * j_inverse(1.0 - i_a)))
}

/// Edge-weighted VND mixture for an irregular code.
pub fn vnd_mixture(dist: &DegreeDistribution, i_a: f64, i_ch: f64) -> Result<f64> {
    unit(i_a, "I_A")?;
    unit(i_ch, "I_ch")?;
    let (sa, sc) = (j_inverse(i_a), j_inverse(i_ch));
    Ok(dist
        .var_edge_fractions()
        .iter()
        .map(|&(d, w)| w * j_function(vnd_sigma(d, sa, sc)))
        .sum())
}

/// Edge-weighted CND mixture.
pub fn cnd_mixture(dist: &DegreeDistribution, i_a: f64) -> Result<f64> {
    unit(i_a, "I_A")?;
    let s = j_inverse(1.0 - i_a);
    Ok(dist
        .chk_edge_fractions()
        .iter()
        .map(|&(d, w)| w * (1.0 - j_function(((d - 1) as f64).sqrt() * s)))
        .sum())
}

/// Information the detector receives from the decoder when every check
/// message into a variable node has information `I_A`: the node sees all
/// `d` messages, averaged over nodes.
pub fn detector_apriori(dist: &DegreeDistribution, i_a: f64) -> f64 {
    let s = j_inverse(i_a);
    dist.var_degrees
        .iter()
        .map(|&(d, f)| f * j_function((d as f64).sqrt() * s))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedChart {
    pub grid: Vec<f64>,
    /// Detector composed with the VND, as a function of the VND a-priori.
    pub vnd: Vec<f64>,
    /// CND extrinsic as a function of its a-priori input.
    pub cnd: Vec<f64>,
    /// Operating point the detector curve was measured at.
    pub launch_power_dbm: Option<f64>,
}

impl CombinedChart {
    pub fn vnd_at(&self, x: f64) -> f64 {
        interp(&self.grid, &self.vnd, x)
    }

    pub fn cnd_at(&self, x: f64) -> f64 {
        interp(&self.grid, &self.cnd, x)
    }
}

/// Combined chart on an `n`-point grid. `detector` maps detector a-priori
/// information to detector extrinsic information; its output is clamped to
/// [0, 1].
pub fn combined_chart(
    detector: &dyn Fn(f64) -> f64,
    dist: &DegreeDistribution,
    n: usize,
    launch_power_dbm: Option<f64>,
) -> Result<CombinedChart> {
    if n < 2 {
        return Err(domain_err("chart grid needs at least 2 points"));
    }
    dist.validate()?;
    let grid = unit_grid(n);
    let mut vnd = Vec::with_capacity(n);
    let mut cnd = Vec::with_capacity(n);
    for &x in &grid {
        let i_ch = detector(detector_apriori(dist, x)).clamp(0.0, 1.0);
        vnd.push(vnd_mixture(dist, x, i_ch)?);
        cnd.push(cnd_mixture(dist, x)?);
    }
    Ok(CombinedChart {
        grid,
        vnd,
        cnd,
        launch_power_dbm,
    })
}

/// [`combined_chart`] driven by a sampled detector curve. Queries outside
/// the sampled range hold the end value and log a warning.
pub fn combined_chart_from_curve(
    curve: &super::ExitCurve,
    dist: &DegreeDistribution,
    n: usize,
) -> Result<CombinedChart> {
    let warned = std::cell::Cell::new(false);
    let det = |x: f64| {
        let (v, outside) = curve.eval_checked(x);
        if outside && !warned.get() {
            log::warn!("detector curve queried at {x} outside its sampled range");
            warned.set(true);
        }
        v
    };
    combined_chart(&det, dist, n, curve.launch_power_dbm)
}

/// Convergence threshold for the trajectory and the tunnel check.
pub const TRAJECTORY_EPS: f64 = 1e-3;
/// Vertical tunnel margin used by the degree optimizer.
pub const TUNNEL_DELTA: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Staircase corners `(I_A,VND, I_E,VND)` and `(I_E,CND, I_A,CND)`.
    pub points: Vec<(f64, f64)>,
    pub converged: bool,
    /// VND a-priori reached at the end.
    pub final_i: f64,
}

/// Alternates VND and CND starting from zero a-priori information.
pub fn trajectory(chart: &CombinedChart, max_steps: usize) -> Trajectory {
    let mut x = 0.0;
    let mut points = vec![(0.0, 0.0)];
    let mut converged = false;
    for _ in 0..max_steps {
        let y = chart.vnd_at(x);
        points.push((x, y));
        if y >= 1.0 - TRAJECTORY_EPS {
            converged = true;
            break;
        }
        let next = chart.cnd_at(y);
        if next <= x + 1e-12 {
            break;
        }
        x = next;
        points.push((x, y));
        if x >= 1.0 - TRAJECTORY_EPS {
            converged = true;
            break;
        }
    }
    Trajectory {
        points,
        converged,
        final_i: x,
    }
}

/// True when the VND curve clears the inverted CND curve by `delta`
/// vertically at every grid point that has not yet converged.
pub fn tunnel_open(chart: &CombinedChart, delta: f64) -> bool {
    chart.grid.iter().zip(&chart.vnd).all(|(&x, &y)| {
        y >= 1.0 - TRAJECTORY_EPS || chart.cnd_at((y - delta).max(0.0)) >= x
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn degenerate_cases() {
        for &a in &[0.0, 0.3, 1.0] {
            assert_eq!(vnd_curve(1, a, 0.42).unwrap(), 0.42);
        }
        for dc in 2..40 {
            assert!((cnd_curve(dc, 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(vnd_curve(0, 0.1, 0.1).is_err());
        assert!(cnd_curve(3, 1.1).is_err());
    }

    #[test]
    fn cnd_non_decreasing() {
        for dc in 2..=40 {
            let mut prev = -1.0;
            for k in 0..=200 {
                let v = cnd_curve(dc, k as f64 / 200.0).unwrap();
                assert!(v >= prev - 1e-15, "dc {dc} at {k}");
                prev = v;
            }
        }
    }

    #[test]
    fn cnd_matches_parity_check_monte_carlo() {
        // Extrinsic LLR of a single parity check over Gaussian inputs.
        let dc = 4;
        let n = 200_000;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let z = Normal::new(0.0, 1.0).unwrap();
        for &i_a in &[0.2, 0.5, 0.8] {
            let s = j_inverse(i_a);
            let mut total = 0.0;
            for _ in 0..n {
                // All-zero codeword; every input has mean s²/2.
                let mut prod = 1.0;
                for _ in 0..dc - 1 {
                    let l: f64 = s * s / 2.0 + s * z.sample(&mut rng);
                    prod *= (0.5 * l).tanh();
                }
                let ext = 2.0 * prod.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh();
                total += crate::exit::softplus(-ext);
            }
            let mc = 1.0 - total / n as f64 / std::f64::consts::LN_2;
            let an = cnd_curve(dc, i_a).unwrap();
            assert!((mc - an).abs() < 0.02, "I_A {i_a}: {mc} vs {an}");
        }
    }

    fn dist_9_10() -> DegreeDistribution {
        DegreeDistribution::new(vec![(2, 0.1), (3, 0.8), (4, 0.1)], vec![(30, 1.0)]).unwrap()
    }

    #[test]
    fn flat_detector_is_plain_vnd() {
        let d = dist_9_10();
        let chart = combined_chart(&|_| 0.7, &d, 101, None).unwrap();
        for (x, v) in chart.grid.iter().zip(&chart.vnd) {
            assert!((v - vnd_mixture(&d, *x, 0.7).unwrap()).abs() < 1e-12);
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn steeper_detector_raises_combined_curve() {
        let d = dist_9_10();
        let low = combined_chart(&|x| 0.6 + 0.05 * x, &d, 101, None).unwrap();
        let high = combined_chart(&|x| 0.6 + 0.2 * x, &d, 101, None).unwrap();
        for (a, b) in low.vnd.iter().zip(&high.vnd) {
            assert!(b >= a);
        }
    }

    fn synthetic(vnd: impl Fn(f64) -> f64, cnd: impl Fn(f64) -> f64) -> CombinedChart {
        let grid = unit_grid(1001);
        CombinedChart {
            vnd: grid.iter().map(|&x| vnd(x)).collect(),
            cnd: grid.iter().map(|&x| cnd(x)).collect(),
            grid,
            launch_power_dbm: None,
        }
    }

    #[test]
    fn open_tunnel_converges() {
        let c = synthetic(|x| (0.3 + 0.8 * x).min(1.0), |y| y);
        let t = trajectory(&c, 1000);
        assert!(t.converged);
        assert!(tunnel_open(&c, 0.005));
        for w in t.points.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn crossing_curves_stall() {
        // VND(x) = 0.3 + 0.5x crosses the identity CND at 0.6.
        let c = synthetic(|x| 0.3 + 0.5 * x, |y| y);
        let t = trajectory(&c, 10_000);
        assert!(!t.converged);
        assert!((t.final_i - 0.6).abs() < 2e-3, "{}", t.final_i);
        assert!(!tunnel_open(&c, 0.005));
    }
}
