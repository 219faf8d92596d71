use crate::error::{Error, Result};
use crate::numerics::{norm2, Matrix};
use crate::solver::lasso::{lasso_fit, LassoOptions, LassoProblem};

const MAX_ALTERNATIONS: usize = 100;
const RELATIVE_CHANGE: f64 = 1e-6;
/// Noise levels this far below the starting scale are treated as an exact fit.
const EXACT_FIT: f64 = 1e-10;

/// `sqrt(2 log p / n)`
pub fn default_lambda0(n: usize, p: usize) -> f64 {
    (2.0 * (p.max(2) as f64).ln() / n as f64).sqrt()
}

#[derive(Debug, Clone)]
pub struct ScaledLassoFit {
    pub coefficients: Vec<f64>,
    pub sigma: f64,
    pub iterations: usize,
}

/// Joint estimate of coefficients and noise level.
///
/// Alternates a lasso fit at penalty `sigma * lambda0` with the update
/// `sigma² = ||r - Z β||² / n`, starting from `sigma = ||r|| / sqrt(n)`, until
/// `sigma` moves by less than `1e-6` relative.
pub fn scaled_lasso(
    z: &Matrix,
    r: &[f64],
    lambda0: f64,
    options: &LassoOptions,
) -> Result<ScaledLassoFit> {
    let n = z.rows();
    if n < 2 {
        return Err(Error::InvalidArgument("scaled lasso needs n >= 2".into()));
    }
    if !(lambda0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda0 must be positive, got {lambda0}"
        )));
    }
    if r.len() != n {
        return Err(Error::Dimension(format!(
            "response of length {} against {n} rows",
            r.len()
        )));
    }
    if r.iter().all(|&v| v == r[0]) {
        return Err(Error::ZeroVariance);
    }
    let sqrt_n = (n as f64).sqrt();
    let start = norm2(r) / sqrt_n;
    let mut sigma = start;
    let mut coefficients: Option<Vec<f64>> = None;
    for it in 1..=MAX_ALTERNATIONS {
        let problem = LassoProblem::single(z, r, sigma * lambda0)?;
        let fit = lasso_fit(&problem, options, coefficients.as_deref())?;
        let fitted = z.matvec(&fit.coefficients)?;
        let rss: f64 = r.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
        let next = rss.sqrt() / sqrt_n;
        coefficients = Some(fit.coefficients);
        let done = (next - sigma).abs() < RELATIVE_CHANGE * sigma || next <= EXACT_FIT * start;
        sigma = next;
        if done {
            if !(sigma > 0.0) {
                sigma = EXACT_FIT * start;
            }
            return Ok(ScaledLassoFit {
                coefficients: coefficients.unwrap_or_default(),
                sigma,
                iterations: it,
            });
        }
    }
    Err(Error::ScaledLassoNotConverged {
        iterations: MAX_ALTERNATIONS,
        sigma,
    })
}
