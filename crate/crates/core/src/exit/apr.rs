//! Synthetic a-priori LLRs for a target mutual information.

use super::j_inverse;
use crate::error::{domain_err, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// σ used for `I_in = 1`; J(7) is within 1e-3 of one.
pub const APR_SIGMA_CAP: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprSynthSpec {
    pub i_in: f64,
    pub seed: u64,
}

/// σ = J⁻¹(I), capped at [`APR_SIGMA_CAP`].
pub fn apr_sigma(i_in: f64) -> f64 {
    j_inverse(i_in).min(APR_SIGMA_CAP)
}

/// Draws `L ~ N((−1)^b σ²/2, σ²)` for each bit from `rng`.
pub fn synthesize_apr_with<R: Rng>(bits: &[u8], sigma: f64, rng: &mut R, out: &mut [f64]) {
    let mean = 0.5 * sigma * sigma;
    for (o, &b) in out.iter_mut().zip(bits) {
        if sigma == 0.0 {
            *o = 0.0;
            continue;
        }
        let z: f64 = rng.sample(StandardNormal);
        let mu = if b == 0 { mean } else { -mean };
        *o = mu + sigma * z;
    }
}

/// Gaussian a-priori LLRs whose mutual information with `bits` is `I_in`.
pub fn synthesize_apr(bits: &[u8], spec: &AprSynthSpec) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&spec.i_in) {
        return Err(domain_err(format!("I_in = {} outside [0, 1]", spec.i_in)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = vec![0.0; bits.len()];
    synthesize_apr_with(bits, apr_sigma(spec.i_in), &mut rng, &mut out);
    Ok(out)
}
