//! Outer BCH code, modeled as a pass/fail threshold on its input BER.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BchThresholdModel {
    pub input_ber_threshold: f64,
    pub outer_rate: f64,
    pub n: usize,
    pub k: usize,
    pub d_min: usize,
}

impl BchThresholdModel {
    pub const STANDARD: Self = Self {
        input_ber_threshold: 5e-5,
        outer_rate: 0.9922,
        n: 30832,
        k: 30592,
        d_min: 33,
    };

    pub fn passes(&self, post_ldpc_ber: f64) -> bool {
        post_ldpc_ber <= self.input_ber_threshold
    }
}

impl Default for BchThresholdModel {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// True when the post-LDPC BER is low enough for the outer code to clean up.
pub fn bch_pass(post_ldpc_ber: f64) -> bool {
    BchThresholdModel::STANDARD.passes(post_ldpc_ber)
}
