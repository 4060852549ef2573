use crate::error::{Error, Result};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// Node-perspective degree polynomials λ(x) = Σ fᵢ x^{dᵢ}, ρ(x) = Σ gⱼ x^{dⱼ}:
/// fᵢ is the fraction of variable nodes with degree dᵢ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    pub var_degrees: Vec<(usize, f64)>,
    pub chk_degrees: Vec<(usize, f64)>,
}

fn mean(list: &[(usize, f64)]) -> f64 {
    list.iter().map(|(d, f)| *d as f64 * f).sum()
}

fn to_edge(list: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let m = mean(list);
    list.iter().map(|&(d, f)| (d, d as f64 * f / m)).collect()
}

impl DegreeDistribution {
    pub fn new(var_degrees: Vec<(usize, f64)>, chk_degrees: Vec<(usize, f64)>) -> Result<Self> {
        let d = Self {
            var_degrees,
            chk_degrees,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn regular(dv: usize, dc: usize) -> Result<Self> {
        Self::new(vec![(dv, 1.0)], vec![(dc, 1.0)])
    }

    /// Variable degrees with a check-concentrated ρ of average `dc_avg`:
    /// the two integer degrees around it, weighted to hit the average.
    /// Rate-9/10 polynomials: λ(x) = 0.1x² + 0.8x³ + 0.1x⁴, ρ(x) = x³⁰.
    pub fn dvbs2_r9_10() -> Self {
        Self::new(vec![(2, 0.1), (3, 0.8), (4, 0.1)], vec![(30, 1.0)]).expect("valid")
    }

    /// Rate-5/6 polynomials: λ(x) = (2x² + 9x³ + x¹³)/12, ρ(x) = x²².
    pub fn dvbs2_r5_6() -> Self {
        Self::new(
            vec![(2, 2.0 / 12.0), (3, 9.0 / 12.0), (13, 1.0 / 12.0)],
            vec![(22, 1.0)],
        )
        .expect("valid")
    }

    pub fn check_concentrated(var_degrees: Vec<(usize, f64)>, dc_avg: f64) -> Result<Self> {
        if !(dc_avg >= 2.0) {
            return Err(Error::Domain(format!("average check degree {dc_avg} below 2")));
        }
        let lo = dc_avg.floor();
        let frac_hi = dc_avg - lo;
        let chk = if frac_hi < 1e-12 {
            vec![(lo as usize, 1.0)]
        } else {
            vec![(lo as usize, 1.0 - frac_hi), (lo as usize + 1, frac_hi)]
        };
        Self::new(var_degrees, chk)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, list) in [("variable", &self.var_degrees), ("check", &self.chk_degrees)] {
            if list.is_empty() {
                return Err(Error::Domain(format!("empty {name} degree list")));
            }
            if list.iter().any(|(d, f)| *d < 2 || !(*f > 0.0)) {
                return Err(Error::Domain(format!(
                    "{name} degrees must be >= 2 with positive fractions"
                )));
            }
            let s: f64 = list.iter().map(|(_, f)| f).sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!("{name} fractions sum to {s}, not 1")));
            }
            let mut degs: Vec<usize> = list.iter().map(|(d, _)| *d).collect();
            degs.sort_unstable();
            degs.dedup();
            if degs.len() != list.len() {
                return Err(Error::Domain(format!("repeated {name} degree")));
            }
        }
        Ok(())
    }

    pub fn mean_var_degree(&self) -> f64 {
        mean(&self.var_degrees)
    }

    pub fn mean_chk_degree(&self) -> f64 {
        mean(&self.chk_degrees)
    }

    /// Edge-perspective variable fractions (share of edges at each degree).
    pub fn var_edge_fractions(&self) -> Vec<(usize, f64)> {
        to_edge(&self.var_degrees)
    }

    pub fn chk_edge_fractions(&self) -> Vec<(usize, f64)> {
        to_edge(&self.chk_degrees)
    }

    /// Design rate computed on rational approximations of the fractions.
    /// Decimal inputs such as 0.1 or 2/12 are recovered exactly.
    pub fn design_rate_exact(&self) -> Option<Ratio<i64>> {
        let ratio_mean = |list: &[(usize, f64)]| -> Option<Ratio<i64>> {
            let mut acc = Ratio::from_integer(0i64);
            for &(d, f) in list {
                let r = Ratio::<i64>::approximate_float(f)?;
                // Only accept approximations that are exact to double precision.
                if ((*r.numer() as f64 / *r.denom() as f64) - f).abs() > 1e-15 {
                    return None;
                }
                acc += r * Ratio::from_integer(d as i64);
            }
            Some(acc)
        };
        let dv = ratio_mean(&self.var_degrees)?;
        let dc = ratio_mean(&self.chk_degrees)?;
        if dc == Ratio::from_integer(0) {
            return None;
        }
        Some(Ratio::from_integer(1) - dv / dc)
    }
}

/// `1 − E[d_v]/E[d_c]` with node-perspective means.
pub fn design_rate(dist: &DegreeDistribution) -> Result<f64> {
    let dc = dist.mean_chk_degree();
    if dc == 0.0 {
        return Err(Error::Domain("mean check degree is zero".into()));
    }
    Ok(1.0 - dist.mean_var_degree() / dc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_nine_tenths() {
        let d = DegreeDistribution::new(vec![(2, 0.1), (3, 0.8), (4, 0.1)], vec![(30, 1.0)]).unwrap();
        assert!((d.mean_var_degree() - 3.0).abs() < 1e-12);
        assert_eq!(d.design_rate_exact(), Some(Ratio::new(9, 10)));
        assert!((design_rate(&d).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn rate_five_sixths() {
        let d = DegreeDistribution::new(
            vec![(2, 2.0 / 12.0), (3, 9.0 / 12.0), (13, 1.0 / 12.0)],
            vec![(22, 1.0)],
        )
        .unwrap();
        assert_eq!(d.design_rate_exact(), Some(Ratio::new(5, 6)));
    }

    #[test]
    fn regular_half_rate() {
        let d = DegreeDistribution::regular(3, 6).unwrap();
        assert_eq!(d.design_rate_exact(), Some(Ratio::new(1, 2)));
    }

    #[test]
    fn invalid_distributions() {
        assert!(DegreeDistribution::new(vec![(1, 1.0)], vec![(6, 1.0)]).is_err());
        assert!(DegreeDistribution::new(vec![(3, 0.5)], vec![(6, 1.0)]).is_err());
        // Coefficients summing to 1.2 are rejected.
        assert!(DegreeDistribution::new(vec![(2, 0.725), (9, 0.25), (30, 0.225)], vec![(30, 1.0)]).is_err());
        assert!(DegreeDistribution::new(vec![(3, 0.5), (3, 0.5)], vec![(6, 1.0)]).is_err());
    }

    #[test]
    fn check_concentrated_hits_average() {
        let d = DegreeDistribution::check_concentrated(vec![(3, 1.0)], 6.25).unwrap();
        assert_eq!(d.chk_degrees, vec![(6, 0.75), (7, 0.25)]);
        assert!((d.mean_chk_degree() - 6.25).abs() < 1e-12);
    }

    #[test]
    fn edge_fractions_sum_to_one() {
        let d = DegreeDistribution::new(vec![(2, 0.1), (3, 0.8), (4, 0.1)], vec![(30, 1.0)]).unwrap();
        let e = d.var_edge_fractions();
        let s: f64 = e.iter().map(|(_, f)| f).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((e[0].1 - 0.2 / 3.0).abs() < 1e-12);
    }
}
