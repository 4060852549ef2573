use crate::error::{shape_err, Result};
use serde::{Deserialize, Serialize};

/// Bit decisions or soft values, positive LLR meaning bit 0.
#[derive(Debug, Clone, Copy)]
pub enum Decisions<'a> {
    Bits(&'a [u8]),
    Llrs(&'a [f64]),
}

impl Decisions<'_> {
    fn len(&self) -> usize {
        match self {
            Decisions::Bits(b) => b.len(),
            Decisions::Llrs(l) => l.len(),
        }
    }

    fn bit(&self, i: usize) -> u8 {
        match self {
            Decisions::Bits(b) => b[i],
            Decisions::Llrs(l) => hard_bit(l[i]),
        }
    }
}

pub fn hard_bit(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ber: f64,
    /// BER-derived Q factor; `+inf` for error-free, `-inf` at BER >= 0.5.
    pub q_factor_db: f64,
    pub errors: u64,
    pub count: u64,
}

/// Q in dB from a pre-FEC BER: `20·log10(√2·erfcinv(2·BER))`.
pub fn q_from_ber(ber: f64) -> f64 {
    if ber <= 0.0 {
        f64::INFINITY
    } else if ber >= 0.5 {
        f64::NEG_INFINITY
    } else {
        20.0 * (2f64.sqrt() * statrs::function::erf::erfc_inv(2.0 * ber)).log10()
    }
}

pub fn ber_and_q(decisions: Decisions<'_>, truth: &[u8]) -> Result<MetricReport> {
    if decisions.len() != truth.len() {
        return Err(shape_err(format!(
            "{} decisions for {} reference bits",
            decisions.len(),
            truth.len()
        )));
    }
    let errors = (0..truth.len())
        .filter(|&i| decisions.bit(i) != truth[i])
        .count() as u64;
    let count = truth.len() as u64;
    let ber = if count == 0 {
        0.0
    } else {
        errors as f64 / count as f64
    };
    Ok(MetricReport {
        ber,
        q_factor_db: q_from_ber(ber),
        errors,
        count,
    })
}
