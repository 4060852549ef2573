//! LDPC codes: degree distributions, construction, encoding, belief
//! propagation and the outer-code threshold.

mod bch;
mod code;
mod construct;
mod decode;
mod degree;
mod format;

pub use bch::{bch_pass, BchThresholdModel};
pub use code::SparseParityCheck;
pub use construct::construct_code;
pub use decode::{bp_decode, BpDecoder, BpOutput, LLR_CLAMP};
pub use degree::{design_rate, DegreeDistribution};
pub use format::{read_alist, read_code, write_alist, write_code};
