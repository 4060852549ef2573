//! EXIT-chart analysis: J-function, mutual-information estimation, decoder
//! transfer curves, trajectories and degree-distribution optimization.

mod apr;
mod charts;
mod cubic;
mod curve;
mod detector;
mod jfunc;
mod mi;
mod optimize;

pub use apr::{apr_sigma, synthesize_apr, synthesize_apr_with, AprSynthSpec, APR_SIGMA_CAP};
pub use charts::{
    cnd_curve, cnd_mixture, combined_chart, combined_chart_from_curve, detector_apriori, trajectory,
    tunnel_open, vnd_curve, vnd_mixture, CombinedChart, Trajectory, TRAJECTORY_EPS, TUNNEL_DELTA,
};
pub use cubic::{fit_cubic, fit_polynomial, CubicModel};
pub use curve::{interp, unit_grid, ExitCurve, ExitPoint};
pub use detector::{measure_detector_exit, SoftDetector};
pub use jfunc::{j_function, j_inverse, SIGMA_MAX};
pub use mi::{mi_from_llrs, softplus};
pub use optimize::{max_rate_for, optimize_degrees, OptimizedCode, OptimizerSpec};
