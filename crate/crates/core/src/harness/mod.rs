//! Monte Carlo experiments: strong errors against fine-grid references,
//! log-log rate fits, positivity-event frequencies, moment estimates and
//! timings, with CSV output.

mod experiment;
pub mod report;
mod stats;
mod timing;

pub use experiment::{
    level_of, positivity_probability, run_convergence, run_moments, run_positivity, simulate_paths, CellReport,
    ConvergenceReport, ConvergenceSpec, ErrorMetric, MomentRow, MomentSpec, PositivityEstimate, PositivitySpec,
    RefMode, Sampling, SchemeSummary, DEFAULT_REF_M,
};
pub use stats::{
    binomial_ci, estimate_moments, fit_rate, mean_abs_squared_diff, rmse, MomentEstimate, MomentSign, RateFit,
};
pub use timing::{run_comparison, ComparisonReport, ComparisonRow, ComparisonSpec};

use crate::error::{Result, SdeError};

/// Run `f` on a dedicated pool of `n` workers (`0` = one per core).
pub fn with_workers<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| SdeError::invalid("threads", e.to_string()))?;
    Ok(pool.install(f))
}
