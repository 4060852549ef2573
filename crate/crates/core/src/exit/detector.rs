use super::{apr_sigma, mi_from_llrs, synthesize_apr_with, ExitCurve, ExitPoint};
use crate::error::{domain_err, Result};
use crate::par::Exec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A soft-in soft-out detector over a fixed labeled data set.
pub trait SoftDetector: Sync {
    /// Transmitted bits, in the order the detector consumes a-priori LLRs.
    fn bits(&self) -> &[u8];
    /// Extrinsic LLRs for the given a-priori LLRs (same layout as `bits`).
    fn extrinsic(&self, apr: &[f64]) -> Result<Vec<f64>>;
}

/// Measures `I_out(I_in)` by feeding Gaussian a-priori LLRs of each grid
/// information and estimating the information of the extrinsic output.
pub fn measure_detector_exit<D: SoftDetector + ?Sized>(
    det: &D,
    grid: &[f64],
    seed: u64,
    exec: Exec,
    name: &str,
) -> Result<ExitCurve> {
    if grid.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(domain_err("I_in grid outside [0, 1]"));
    }
    let bits = det.bits();
    let points: Result<Vec<ExitPoint>> = exec
        .map(grid.len(), |i| {
            let point_seed = seed.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
            let mut apr = vec![0.0; bits.len()];
            synthesize_apr_with(bits, apr_sigma(grid[i]), &mut rng, &mut apr);
            let ext = det.extrinsic(&apr)?;
            Ok(ExitPoint {
                i_in: grid[i],
                i_out: mi_from_llrs(&ext, bits)?,
                n_samples: bits.len(),
                seed: point_seed,
            })
        })
        .into_iter()
        .collect();
    ExitCurve::new(points?, name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exit::unit_grid;

    /// Channel LLRs plus a-priori, as a repetition-style detector whose
    /// extrinsic output ignores the a-priori input.
    struct Fixed {
        bits: Vec<u8>,
        llr: Vec<f64>,
    }

    impl SoftDetector for Fixed {
        fn bits(&self) -> &[u8] {
            &self.bits
        }
        fn extrinsic(&self, _apr: &[f64]) -> Result<Vec<f64>> {
            Ok(self.llr.clone())
        }
    }

    #[test]
    fn flat_detector_gives_flat_curve() {
        let bits: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
        let llr = bits.iter().map(|&b| if b == 0 { 2.0 } else { -2.0 }).collect();
        let d = Fixed { bits, llr };
        let c = measure_detector_exit(&d, &unit_grid(5), 1, Exec::Sequential, "f").unwrap();
        let o = c.outputs();
        assert!(o.iter().all(|&v| (v - o[0]).abs() < 1e-15));
        assert!(o[0] > 0.0 && o[0] < 1.0);
    }
}
