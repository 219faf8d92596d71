//! Penalized least-squares engines.

mod cv;
mod lasso;
mod nodewise;
mod scaled;

pub use cv::{cv_lambda, CvOptions, CvResult};
pub use lasso::{lasso_fit, LassoOptions, LassoProblem, LassoSolution};
pub use nodewise::{nodewise_precision, NodewisePenalty, PrecisionEstimate, DEFAULT_NODEWISE_C};
pub use scaled::{default_lambda0, scaled_lasso, ScaledLassoFit};

/// Default constant `c` of the penalty rule.
pub const DEFAULT_LAMBDA_C: f64 = 0.5;

/// Penalty rule `λ = c · σ · sqrt(2 log p / n)`.
pub fn penalty_level(c: f64, sigma: f64, p: usize, n: usize) -> f64 {
    c * sigma * (2.0 * (p.max(2) as f64).ln() / n as f64).sqrt()
}
