//! Receiver front end and metrics.
//!
//! No carrier recovery block exists: the channel model has no laser phase
//! noise, and the static phase left by the fiber is absorbed by the
//! data-aided equalizer.

mod lineq;
mod matched;
mod metrics;

pub use lineq::{ls_equalizer_apply, ls_equalizer_fit, LinearEq};
pub use matched::{matched_filter_downsample, normalize_power};
pub use metrics::{ber_and_q, hard_bit, q_from_ber, Decisions, MetricReport};
