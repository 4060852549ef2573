//! Coherent dual-polarization QAM transmission over dispersion-managed fiber,
//! neural turbo equalization, LDPC coding and EXIT-chart based code design.
//!
//! Module map:
//! - [`signal`]: Gray-labeled DP-QAM, RRC shaping, WDM, exact LLR demapper.
//! - [`fiber`]: split-step Manakov propagation, inline compensation, ASE.
//! - [`rx`]: matched filter, least-squares linear equalizer, BER/Q metrics.
//! - [`neural`]: residual equalizer network, losses, Adam training, turbo loop.
//! - [`ldpc`]: degree distributions, PEG construction, encoding, sum-product.
//! - [`exit`]: J-function, MI estimation, EXIT curves, degree optimization.

pub mod dsp;
pub mod error;
pub mod exit;
pub mod fiber;
pub mod ldpc;
pub mod neural;
pub mod par;
pub mod rx;
pub mod signal;
pub mod units;
pub mod verify;

pub use error::{Error, Result};
pub use par::Exec;
