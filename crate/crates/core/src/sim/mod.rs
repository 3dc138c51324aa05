//! Exact simulation of Gaussian processes on uniform grids and the path
//! functionals (suprema, Shepp statistics, maximum loss, span) computed on them.

mod covariance;
mod engine;
mod functionals;
mod grid;
mod process;

pub use covariance::{fbm_cov, fgn_acov, ou_acov, slepian_acov, Autocovariance, CovarianceModel};
pub use engine::{CholeskyGenerator, CirculantGenerator, Scratch, CHOLESKY_JITTER, EIGEN_CLAMP_REL};
pub use functionals::{
    field_supremum, incremental_field, max_loss_and_span, max_loss_and_span_of, shepp_supremum, FieldSample,
};
pub use grid::Grid1D;
pub use process::{
    simulate_brownian_bridge, simulate_fbm, simulate_fbm_with, simulate_stationary, simulate_stationary_with, Method,
    PathSimulator, SamplePath, SimOptions,
};

/// Step suggested for resolving suprema at threshold `u`: `0.1·u^{−2/α}`.
pub fn suggested_step(u: f64, alpha: f64) -> f64 {
    0.1 * u.max(1.0).powf(-2.0 / alpha)
}
