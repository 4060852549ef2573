use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitPoint {
    pub i_in: f64,
    pub i_out: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Sampled transfer curve `I_in -> I_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitCurve {
    points: Vec<ExitPoint>,
    pub detector: String,
    pub launch_power_dbm: Option<f64>,
}

impl ExitCurve {
    pub fn new(points: Vec<ExitPoint>, detector: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InputShape("empty EXIT curve".into()));
        }
        for w in points.windows(2) {
            if w[1].i_in <= w[0].i_in {
                return Err(Error::Domain("I_in must be strictly increasing".into()));
            }
        }
        for p in &points {
            let ok = |v: f64| (0.0..=1.0).contains(&v);
            if !ok(p.i_in) || !ok(p.i_out) {
                return Err(Error::Domain(format!(
                    "point ({}, {}) outside [0, 1]",
                    p.i_in, p.i_out
                )));
            }
        }
        Ok(Self {
            points,
            detector: detector.into(),
            launch_power_dbm: None,
        })
    }

    /// Samples `f` on `n` evenly spaced points over [0, 1].
    pub fn from_fn(n: usize, detector: &str, f: impl Fn(f64) -> f64) -> Result<Self> {
        let pts = unit_grid(n)
            .into_iter()
            .map(|x| ExitPoint {
                i_in: x,
                i_out: f(x).clamp(0.0, 1.0),
                n_samples: 0,
                seed: 0,
            })
            .collect();
        Self::new(pts, detector)
    }

    pub fn points(&self) -> &[ExitPoint] {
        &self.points
    }

    pub fn inputs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.i_in).collect()
    }

    pub fn outputs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.i_out).collect()
    }

    pub fn covers_unit_interval(&self) -> bool {
        self.points[0].i_in <= 0.0 && self.points[self.points.len() - 1].i_in >= 1.0
    }

    /// Linear interpolation; outside the sampled range the end value is
    /// held and the second field is `true`.
    pub fn eval_checked(&self, x: f64) -> (f64, bool) {
        let p = &self.points;
        if x < p[0].i_in {
            return (p[0].i_out, true);
        }
        if x > p[p.len() - 1].i_in {
            return (p[p.len() - 1].i_out, true);
        }
        (interp(&self.inputs(), &self.outputs(), x), false)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_checked(x).0
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["I_in", "I_out", "n_samples", "seed"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for p in &self.points {
            wr.write_record([
                format!("{:?}", p.i_in),
                format!("{:?}", p.i_out),
                p.n_samples.to_string(),
                p.seed.to_string(),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, detector: &str) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
        if header.iter().collect::<Vec<_>>() != ["I_in", "I_out", "n_samples", "seed"] {
            return Err(Error::Format(format!("unexpected curve header {header:?}")));
        }
        let mut pts = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            let f = |i: usize| -> Result<f64> {
                rec[i].parse().map_err(|_| Error::Format(format!("bad number {:?}", &rec[i])))
            };
            pts.push(ExitPoint {
                i_in: f(0)?,
                i_out: f(1)?,
                n_samples: rec[2].parse().map_err(|_| Error::Format("bad count".into()))?,
                seed: rec[3].parse().map_err(|_| Error::Format("bad seed".into()))?,
            });
        }
        Self::new(pts, detector)
    }
}

pub fn unit_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Piecewise-linear interpolation on sorted `xs`, clamped at the ends.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let hi = xs.partition_point(|&v| v <= x).min(n - 1);
    let lo = hi - 1;
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let p = |i, o| ExitPoint { i_in: i, i_out: o, n_samples: 1, seed: 0 };
        assert!(ExitCurve::new(vec![p(0.0, 0.1), p(0.0, 0.2)], "d").is_err());
        assert!(ExitCurve::new(vec![p(0.0, 1.1)], "d").is_err());
        assert!(ExitCurve::new(vec![], "d").is_err());
        assert!(ExitCurve::new(vec![p(0.0, 0.1), p(1.0, 0.2)], "d").is_ok());
    }

    #[test]
    fn interpolation_and_clamping() {
        let c = ExitCurve::from_fn(11, "lin", |x| 0.2 + 0.5 * x).unwrap();
        assert!((c.eval(0.33) - (0.2 + 0.5 * 0.33)).abs() < 1e-12);
        assert_eq!(c.eval_checked(1.5), (0.7, true));
        assert!(c.covers_unit_interval());
    }

    #[test]
    fn csv_round_trip() {
        let c = ExitCurve::from_fn(7, "x", |x| x * x).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("I_in,I_out,n_samples,seed\n"));
        let back = ExitCurve::read_csv(&buf[..], "x").unwrap();
        assert_eq!(back, c);
    }
}
