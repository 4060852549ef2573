//! Flooding sum-product decoding.

use super::SparseParityCheck;
use crate::error::{domain_err, shape_err, Result};
use crate::par::Exec;

/// Magnitude limit applied to every LLR entering or leaving a node.
pub const LLR_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BpOutput {
    /// Hard decisions on the posterior, `1` where the posterior is negative.
    pub hard: Vec<u8>,
    pub posterior: Vec<f64>,
    /// Sum of incoming check messages, so `posterior = input + extrinsic`
    /// where `input` is channel plus a-priori.
    pub extrinsic: Vec<f64>,
    pub iterations: usize,
    pub syndrome_ok: bool,
}

/// Edge-indexed view of a parity-check matrix, reusable across frames.
#[derive(Debug, Clone)]
pub struct BpDecoder {
    n: usize,
    /// Variable index of each edge, edges grouped by check.
    edge_var: Vec<u32>,
    /// Edge range of each check.
    chk_start: Vec<usize>,
    /// Edges of each variable, flattened.
    var_edges: Vec<u32>,
    var_start: Vec<usize>,
}

fn clamp(x: f64) -> f64 {
    x.clamp(-LLR_CLAMP, LLR_CLAMP)
}

impl BpDecoder {
    pub fn new(code: &SparseParityCheck) -> Self {
        let n = code.n();
        let mut edge_var = Vec::with_capacity(code.edges());
        let mut chk_start = Vec::with_capacity(code.m() + 1);
        let mut per_var: Vec<Vec<u32>> = vec![Vec::new(); n];
        chk_start.push(0);
        for row in code.rows() {
            for &v in row {
                per_var[v as usize].push(edge_var.len() as u32);
                edge_var.push(v);
            }
            chk_start.push(edge_var.len());
        }
        let mut var_edges = Vec::with_capacity(edge_var.len());
        let mut var_start = Vec::with_capacity(n + 1);
        var_start.push(0);
        for e in per_var {
            var_edges.extend(e);
            var_start.push(var_edges.len());
        }
        Self {
            n,
            edge_var,
            chk_start,
            var_edges,
            var_start,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn sanitize(llrs: &[f64], what: &str) -> Vec<f64> {
        let mut warned = false;
        llrs.iter()
            .map(|&x| {
                if x.is_nan() {
                    if !warned {
                        log::warn!("{what} contains NaN LLRs, treated as 0");
                        warned = true;
                    }
                    0.0
                } else {
                    if !x.is_finite() && !warned {
                        log::warn!("{what} contains infinite LLRs, clamped to ±{LLR_CLAMP}");
                        warned = true;
                    }
                    clamp(x)
                }
            })
            .collect()
    }

    fn syndrome_ok(&self, hard: &[u8]) -> bool {
        self.chk_start.windows(2).all(|w| {
            self.edge_var[w[0]..w[1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ hard[v as usize])
                == 0
        })
    }

    /// Decodes one frame. `apr` is added to the channel LLRs as input.
    pub fn decode(&self, channel: &[f64], apr: Option<&[f64]>, max_iter: usize) -> Result<BpOutput> {
        if channel.len() != self.n {
            return Err(shape_err(format!("{} LLRs for n = {}", channel.len(), self.n)));
        }
        if let Some(a) = apr {
            if a.len() != self.n {
                return Err(shape_err(format!("{} a-priori LLRs for n = {}", a.len(), self.n)));
            }
        }
        if max_iter == 0 {
            return Err(domain_err("max_iter must be at least 1"));
        }
        let ch = Self::sanitize(channel, "channel input");
        let input: Vec<f64> = match apr {
            Some(a) => {
                let a = Self::sanitize(a, "a-priori input");
                ch.iter().zip(&a).map(|(c, a)| c + a).collect()
            }
            None => ch,
        };
        let ne = self.edge_var.len();
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&v| clamp(input[v as usize])).collect();
        let mut c2v = vec![0.0f64; ne];
        let mut t = vec![0.0f64; ne];
        let mut extrinsic = vec![0.0; self.n];
        let mut posterior = input.clone();
        let mut hard = vec![0u8; self.n];
        let mut iterations = 0;
        let mut ok = false;
        for it in 1..=max_iter {
            iterations = it;
            // Check update by the tanh rule with prefix/suffix products.
            for w in self.chk_start.windows(2) {
                let (s, e) = (w[0], w[1]);
                for i in s..e {
                    t[i] = (0.5 * v2c[i]).tanh();
                }
                let mut prefix = 1.0;
                for i in s..e {
                    c2v[i] = prefix;
                    prefix *= t[i];
                }
                let mut suffix = 1.0;
                for i in (s..e).rev() {
                    let p = (c2v[i] * suffix).clamp(-1.0, 1.0);
                    // std's atanh is not exactly odd; keep the update
                    // sign-symmetric so coset decoding is exact.
                    c2v[i] = clamp((2.0 * p.abs().atanh()).copysign(p));
                    suffix *= t[i];
                }
            }
            // Variable update.
            for v in 0..self.n {
                let edges = &self.var_edges[self.var_start[v]..self.var_start[v + 1]];
                let ext: f64 = edges.iter().map(|&e| c2v[e as usize]).sum();
                extrinsic[v] = ext;
                posterior[v] = input[v] + ext;
                hard[v] = u8::from(posterior[v] < 0.0);
                for &e in edges {
                    let e = e as usize;
                    v2c[e] = clamp(posterior[v] - c2v[e]);
                }
            }
            if self.syndrome_ok(&hard) {
                ok = true;
                break;
            }
        }
        Ok(BpOutput {
            hard,
            posterior,
            extrinsic,
            iterations,
            syndrome_ok: ok,
        })
    }

    /// Decodes independent frames, in parallel under [`Exec::Parallel`].
    pub fn decode_batch(
        &self,
        exec: Exec,
        frames: &[Vec<f64>],
        max_iter: usize,
    ) -> Result<Vec<BpOutput>> {
        exec.map_slice(frames, |f| self.decode(f, None, max_iter))
            .into_iter()
            .collect()
    }
}

/// One-shot decode; builds the edge tables on every call.
pub fn bp_decode(
    code: &SparseParityCheck,
    channel: &[f64],
    apr: Option<&[f64]>,
    max_iter: usize,
) -> Result<BpOutput> {
    BpDecoder::new(code).decode(channel, apr, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::{construct_code, DegreeDistribution};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn hamming() -> SparseParityCheck {
        SparseParityCheck::from_rows(
            7,
            4,
            vec![vec![0, 1, 3, 4], vec![0, 2, 3, 4, 5], vec![1, 2, 3, 5, 6]],
            0,
        )
        .unwrap()
    }

    #[test]
    fn strong_llrs_decode_in_one_iteration() {
        let code = hamming();
        let cw = code.encode(&[1, 0, 1, 1]).unwrap();
        let llr: Vec<f64> = cw.iter().map(|&b| if b == 1 { -20.0 } else { 20.0 }).collect();
        let out = bp_decode(&code, &llr, None, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.syndrome_ok);
        assert_eq!(out.hard, cw);
    }

    #[test]
    fn zero_input_stays_zero() {
        let code = hamming();
        let out = bp_decode(&code, &[0.0; 7], None, 5).unwrap();
        assert!(out.posterior.iter().all(|&x| x == 0.0));
        assert!(out.extrinsic.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_error_corrected() {
        let code = hamming();
        let mut llr = vec![3.0; 7];
        llr[2] = -1.0;
        let out = bp_decode(&code, &llr, None, 20).unwrap();
        assert!(out.syndrome_ok);
        assert_eq!(out.hard, vec![0; 7]);
    }

    #[test]
    fn bookkeeping_is_exact() {
        let dist = DegreeDistribution::regular(3, 6).unwrap();
        let code = construct_code(&dist, 240, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let ch: Vec<f64> = (0..240).map(|_| 1.5 + noise.sample(&mut rng)).collect();
        let apr: Vec<f64> = (0..240).map(|_| rng.random_range(-1.0..1.0)).collect();
        for it in 1..6 {
            let out = bp_decode(&code, &ch, Some(&apr), it).unwrap();
            for i in 0..240 {
                assert_eq!(out.posterior[i], ch[i] + apr[i] + out.extrinsic[i]);
            }
        }
    }

    #[test]
    fn nonfinite_inputs_are_clamped() {
        let code = hamming();
        let mut llr = vec![f64::INFINITY; 7];
        llr[0] = f64::NEG_INFINITY;
        llr[1] = f64::NAN;
        let out = bp_decode(&code, &llr, None, 3).unwrap();
        assert!(out.posterior.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn codeword_independence() {
        // Symmetric channel: decoding a random codeword equals decoding the
        // zero codeword with the noise sign-flipped on the ones.
        let dist = DegreeDistribution::regular(3, 6).unwrap();
        let code = construct_code(&dist, 480, 4).unwrap();
        let dec = BpDecoder::new(&code);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
        let cw = code.encode(&info).unwrap();
        let noise = Normal::new(0.0, 0.9).unwrap();
        let z: Vec<f64> = (0..480).map(|_| noise.sample(&mut rng)).collect();
        let to_llr = |y: f64| 2.0 * y / 0.81;
        let zero: Vec<f64> = z.iter().map(|&n| to_llr(1.0 + n)).collect();
        let rand: Vec<f64> = cw
            .iter()
            .zip(&z)
            .map(|(&b, &n)| {
                let s = 1.0 - 2.0 * b as f64;
                to_llr(s * (1.0 + n))
            })
            .collect();
        let a = dec.decode(&zero, None, 30).unwrap();
        let b = dec.decode(&rand, None, 30).unwrap();
        let err_a = a.hard.iter().filter(|&&h| h != 0).count();
        let err_b = b.hard.iter().zip(&cw).filter(|(h, c)| h != c).count();
        assert_eq!(err_a, err_b);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn batch_matches_single() {
        let code = hamming();
        let dec = BpDecoder::new(&code);
        let frames: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0 - 0.4 * i as f64; 7]).collect();
        let seq = dec.decode_batch(Exec::Sequential, &frames, 5).unwrap();
        let par = dec.decode_batch(Exec::Parallel, &frames, 5).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn argument_errors() {
        let code = hamming();
        assert!(bp_decode(&code, &[0.0; 6], None, 5).is_err());
        assert!(bp_decode(&code, &[0.0; 7], Some(&[0.0; 3]), 5).is_err());
        assert!(bp_decode(&code, &[0.0; 7], None, 0).is_err());
    }
}
