//! ten Brink's J-function: mutual information between a bit and a
//! consistent Gaussian LLR with variance σ² and mean ±σ²/2.

const SIGMA_STAR: f64 = 1.6363;
const A1: f64 = -0.0421061;
const B1: f64 = 0.209252;
const C1: f64 = -0.00640081;
const A2: f64 = 0.00181491;
const B2: f64 = -0.142675;
const C2: f64 = -0.0822054;
const D2: f64 = 0.0549608;

/// Largest σ at which the closed form is evaluated; J is 1 beyond.
pub const SIGMA_MAX: f64 = 10.0;

/// Below this σ the cubic piece turns negative; J is continued as `k·σ²`.
const SIGMA_TAIL: f64 = 0.1;
/// Half-width of the blend between the two pieces around `SIGMA_STAR`,
/// where they disagree by about 6e-4.
const BLEND: f64 = 0.05;

fn lower(s: f64) -> f64 {
    A1 * s * s * s + B1 * s * s + C1 * s
}

fn upper(s: f64) -> f64 {
    1.0 - (A2 * s * s * s + B2 * s * s + C2 * s + D2).exp()
}

/// ten Brink's two-piece closed-form approximation of J(σ), made strictly
/// increasing by a quadratic tail near zero and a smoothstep blend across
/// the breakpoint. `J(+∞) = 1`.
pub fn j_function(sigma: f64) -> f64 {
    let s = sigma.max(0.0);
    let v = if s <= SIGMA_TAIL {
        lower(SIGMA_TAIL) * (s / SIGMA_TAIL).powi(2)
    } else if s <= SIGMA_STAR - BLEND {
        lower(s)
    } else if s < SIGMA_STAR + BLEND {
        let t = (s - (SIGMA_STAR - BLEND)) / (2.0 * BLEND);
        let w = t * t * (3.0 - 2.0 * t);
        (1.0 - w) * lower(s) + w * upper(s)
    } else if s <= SIGMA_MAX {
        upper(s)
    } else {
        1.0
    };
    v.clamp(0.0, 1.0)
}

fn j_derivative(s: f64) -> f64 {
    let h = 1e-6 * s.max(1e-3);
    (j_function(s + h) - j_function(s - h)) / (2.0 * h)
}

/// Closed-form inverse approximation, used as the starting point.
fn j_inverse_seed(i: f64) -> f64 {
    if i <= 0.3646 {
        1.09542 * i * i + 0.214217 * i + 2.33727 * i.sqrt()
    } else {
        -0.706692 * (0.386013 * (1.0 - i)).ln() + 1.75017 * i
    }
}

/// Numeric inverse of [`j_function`]: `J⁻¹(0) = 0`, `J⁻¹(I ≥ 1) = +∞`.
/// Values of `I` above `J(SIGMA_MAX)` saturate at `SIGMA_MAX`.
pub fn j_inverse(i: f64) -> f64 {
    if i.is_nan() || i <= 0.0 {
        return 0.0;
    }
    if i >= 1.0 {
        return f64::INFINITY;
    }
    if i >= j_function(SIGMA_MAX) {
        return SIGMA_MAX;
    }
    let (mut lo, mut hi) = (0.0, SIGMA_MAX);
    let mut s = j_inverse_seed(i).clamp(1e-9, SIGMA_MAX);
    for _ in 0..60 {
        let f = j_function(s) - i;
        if f.abs() < 1e-14 {
            break;
        }
        if f > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let d = j_derivative(s);
        let next = s - f / d;
        s = if d > 0.0 && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        assert_eq!(j_function(0.0), 0.0);
        assert!(j_function(10.0) > 0.999);
        assert_eq!(j_function(f64::INFINITY), 1.0);
        assert_eq!(j_inverse(0.0), 0.0);
        assert_eq!(j_inverse(1.0), f64::INFINITY);
    }

    #[test]
    fn continuous_everywhere() {
        for &s in &[SIGMA_TAIL, SIGMA_STAR - BLEND, SIGMA_STAR + BLEND] {
            assert!((j_function(s - 1e-12) - j_function(s + 1e-12)).abs() < 1e-9, "at {s}");
        }
    }

    /// Gauss-Hermite nodes and weights by Golub-Welsch.
    fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = m.symmetric_eigen();
        (0..n)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
            })
            .collect()
    }

    /// J(σ) = 1 − E[log2(1 + e^{−L})], L ~ N(σ²/2, σ²).
    fn j_oracle(sigma: f64, gh: &[(f64, f64)]) -> f64 {
        if sigma == 0.0 {
            return 0.0;
        }
        let e: f64 = gh
            .iter()
            .map(|&(x, w)| {
                let l = sigma * sigma / 2.0 + std::f64::consts::SQRT_2 * sigma * x;
                w * crate::exit::softplus(-l)
            })
            .sum::<f64>()
            / std::f64::consts::PI.sqrt();
        1.0 - e / std::f64::consts::LN_2
    }

    #[test]
    fn close_to_numeric_integral() {
        let gh = gauss_hermite(120);
        let mut worst: f64 = 0.0;
        for k in 0..=1000 {
            let s = k as f64 * 0.01;
            worst = worst.max((j_function(s) - j_oracle(s, &gh)).abs());
        }
        assert!(worst < 1e-3, "max deviation {worst}");
        for k in 1..100 {
            let i = k as f64 / 100.0;
            assert!((j_oracle(j_inverse(i), &gh) - i).abs() < 1e-3, "I = {i}");
        }
    }

    #[test]
    fn strictly_increasing() {
        let mut prev = 0.0;
        for k in 1..=10_000 {
            let v = j_function(k as f64 * 1e-3);
            assert!(v > prev, "at sigma {}", k as f64 * 1e-3);
            prev = v;
        }
    }

    #[test]
    fn inverse_roundtrip() {
        for k in 1..100 {
            let i = k as f64 / 100.0;
            assert!((j_function(j_inverse(i)) - i).abs() < 1e-9, "I = {i}");
        }
    }
}
