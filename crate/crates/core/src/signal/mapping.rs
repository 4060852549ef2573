use super::{BitFrame, SymbolFrame};
use crate::error::{domain_err, shape_err, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Square QAM on one polarization with per-quadrature binary-reflected Gray
/// labels. Points are stored by label, so `points()[l]` is the point carrying
/// label `l` (bit 0 of a symbol is the label MSB).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModFormat {
    m: usize,
    points: Vec<Complex64>,
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

fn gray_inverse(mut g: u32) -> u32 {
    let mut i = g;
    while g > 0 {
        g >>= 1;
        i ^= g;
    }
    i
}

impl ModFormat {
    /// `m` bits per polarization: 1 is BPSK, even values are square QAM.
    pub fn square_qam(m: usize) -> Result<Self> {
        if m == 0 || m > 12 || (m > 1 && m % 2 != 0) {
            return Err(domain_err(format!(
                "square QAM needs m = 1 or an even m up to 12, got {m}"
            )));
        }
        let points = if m == 1 {
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]
        } else {
            let half = m / 2;
            let levels = 1u32 << half;
            // Level index 0 is the most positive amplitude.
            let amp = |idx: u32| (levels - 1) as f64 - 2.0 * idx as f64;
            let scale = (2.0 * ((levels * levels) as f64 - 1.0) / 3.0).sqrt().recip();
            (0..1u32 << m)
                .map(|label| {
                    let i_bits = label >> half;
                    let q_bits = label & (levels - 1);
                    let i = gray_inverse(i_bits);
                    let q = gray_inverse(q_bits);
                    Complex64::new(amp(i), amp(q)) * scale
                })
                .collect()
        };
        Ok(Self { m, points })
    }

    pub fn qpsk() -> Self {
        Self::square_qam(2).expect("valid")
    }

    pub fn qam16() -> Self {
        Self::square_qam(4).expect("valid")
    }

    pub fn qam64() -> Self {
        Self::square_qam(6).expect("valid")
    }

    /// Bits per polarization per symbol.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Bits per dual-polarization symbol.
    pub fn bits_per_dp_symbol(&self) -> usize {
        2 * self.m
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Bit `k` (MSB first) of `label`.
    pub fn label_bit(&self, label: usize, k: usize) -> u8 {
        ((label >> (self.m - 1 - k)) & 1) as u8
    }

    pub fn label_from_bits(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }

    /// Label of the nearest constellation point.
    pub fn nearest(&self, r: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (l, p) in self.points.iter().enumerate() {
            let d = (r - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = l;
            }
        }
        best
    }

    /// Minimum distance between distinct points.
    pub fn min_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                d = d.min((self.points[i] - self.points[j]).norm());
            }
        }
        d
    }

    #[doc(hidden)]
    pub fn gray_code(i: u32) -> u32 {
        gray(i)
    }
}

/// Maps each group of 2m bits to a DP symbol: the first m bits select the
/// x-polarization point, the next m the y-polarization point.
pub fn gray_map(bits: &BitFrame, fmt: &ModFormat, baud: f64) -> Result<SymbolFrame> {
    let bps = fmt.bits_per_dp_symbol();
    if bits.bits_per_symbol() != bps {
        return Err(shape_err(format!(
            "frame has {} bits per symbol, format needs {bps}",
            bits.bits_per_symbol()
        )));
    }
    let m = fmt.m();
    let n = bits.symbols();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for s in 0..n {
        let b = bits.symbol_bits(s);
        x.push(fmt.point(fmt.label_from_bits(&b[..m])));
        y.push(fmt.point(fmt.label_from_bits(&b[m..])));
    }
    SymbolFrame::new(x, y, baud)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_zero_bits_is_first_quadrant() {
        let f = ModFormat::qpsk();
        let bits = BitFrame::new(vec![0, 0, 0, 0], 4).unwrap();
        let s = gray_map(&bits, &f, 1.0).unwrap();
        let want = Complex64::new(1.0, 1.0) / 2f64.sqrt();
        assert!((s.x[0] - want).norm() < 1e-15);
        assert!((s.y[0] - want).norm() < 1e-15);
    }

    #[test]
    fn unit_mean_energy() {
        for m in [1, 2, 4, 6, 8] {
            let f = ModFormat::square_qam(m).unwrap();
            let e: f64 = f.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / f.order() as f64;
            assert!((e - 1.0).abs() < 1e-12, "m={m} e={e}");
        }
    }

    #[test]
    fn adjacent_points_differ_in_one_bit() {
        for m in [2, 4, 6] {
            let f = ModFormat::square_qam(m).unwrap();
            let dmin = f.min_distance();
            let mut pairs = 0;
            for a in 0..f.order() {
                for b in a + 1..f.order() {
                    let d = (f.point(a) - f.point(b)).norm();
                    if (d - dmin).abs() < 1e-9 {
                        pairs += 1;
                        assert_eq!((a ^ b).count_ones(), 1, "labels {a:b} {b:b}");
                    }
                }
            }
            // A side-L grid has 2·L·(L-1) nearest-neighbour pairs.
            let l = 1usize << (m / 2);
            assert_eq!(pairs, 2 * l * (l - 1));
        }
    }

    #[test]
    fn labels_are_a_bijection() {
        let f = ModFormat::qam64();
        for a in 0..f.order() {
            assert_eq!(f.nearest(f.point(a)), a);
        }
    }

    #[test]
    fn odd_bit_count_rejected() {
        let f = ModFormat::qam16();
        let bits = BitFrame::new(vec![0; 12], 6).unwrap();
        assert!(gray_map(&bits, &f, 1.0).is_err());
        assert!(BitFrame::new(vec![0; 7], 8).is_err());
        assert!(ModFormat::square_qam(3).is_err());
    }

    #[test]
    fn gray_inverse_roundtrip() {
        for i in 0..256 {
            assert_eq!(gray_inverse(gray(i)), i);
        }
    }
}
