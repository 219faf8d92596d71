use rayon::prelude::*;

use crate::error::{Error, Result, ResultExt};
use crate::numerics::{dot, Matrix};
use crate::solver::lasso::{coordinate_descent, LassoOptions, StackedDesign};

const MIN_TAU_SQ: f64 = 1e-12;

/// Default constant in the automatic nodewise penalty.
pub const DEFAULT_NODEWISE_C: f64 = 0.25;

/// Penalty for the per-column regressions.
#[derive(Debug, Clone, PartialEq)]
pub enum NodewisePenalty {
    /// `λ_j = c · sqrt(log p / n) · ||u_j|| / sqrt(n)`.
    Auto { c: f64 },
    Fixed(f64),
    PerRow(Vec<f64>),
}

impl Default for NodewisePenalty {
    fn default() -> Self {
        NodewisePenalty::Auto {
            c: DEFAULT_NODEWISE_C,
        }
    }
}

/// Row-wise estimate of the inverse of `UᵀU / n`.
#[derive(Debug, Clone)]
pub struct PrecisionEstimate {
    pub theta: Matrix,
    pub lambdas: Vec<f64>,
    pub tau_sq: Vec<f64>,
}

impl PrecisionEstimate {
    pub fn p(&self) -> usize {
        self.theta.rows()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.p()).map(|i| self.theta[(i, i)]).collect()
    }
}

/// Nodewise regression: column `j` of `u` is lasso-regressed on the other
/// columns giving `γ_j`; with `τ_j² = u_jᵀ(u_j - U_{-j} γ_j) / n`, row `j` of
/// `Θ` is `1/τ_j²` at `j` and `-γ_j / τ_j²` elsewhere.
pub fn nodewise_precision(
    u: &Matrix,
    penalty: &NodewisePenalty,
    options: &LassoOptions,
) -> Result<PrecisionEstimate> {
    let (n, p) = u.shape();
    if n < 2 || p < 2 {
        return Err(Error::InvalidArgument(format!(
            "nodewise regression needs n >= 2 and p >= 2, got {n}x{p}"
        )));
    }
    let design = StackedDesign::from_matrix(u);
    let scale = ((p as f64).ln() / n as f64).sqrt();
    let lambdas: Vec<f64> = match penalty {
        NodewisePenalty::Auto { c } => (0..p)
            .map(|j| {
                let col = design.col(j);
                c * scale * (dot(col, col) / n as f64).sqrt()
            })
            .collect(),
        NodewisePenalty::Fixed(l) => vec![*l; p],
        NodewisePenalty::PerRow(ls) => {
            if ls.len() != p {
                return Err(Error::Dimension(format!(
                    "{} row penalties for {p} columns",
                    ls.len()
                )));
            }
            ls.clone()
        }
    };
    if lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidArgument("nodewise penalties must be >= 0".into()));
    }

    let rows: Vec<(Vec<f64>, f64)> = (0..p)
        .into_par_iter()
        .map(|j| {
            let others: Vec<&[f64]> = (0..p).filter(|&k| k != j).map(|k| design.col(k)).collect();
            let target = design.col(j);
            let fit = coordinate_descent(&others, target, lambdas[j], None, options)
                .context(|| format!("nodewise regression for column {j}"))?;
            let mut resid = target.to_vec();
            for (col, &g) in others.iter().zip(&fit.coefficients) {
                if g != 0.0 {
                    for (r, c) in resid.iter_mut().zip(col.iter()) {
                        *r -= g * c;
                    }
                }
            }
            let tau_sq = dot(target, &resid) / n as f64;
            if !(tau_sq > MIN_TAU_SQ) {
                return Err(Error::DegenerateColumn { index: j, tau_sq });
            }
            let mut row = vec![0.0; p];
            let mut it = fit.coefficients.iter();
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = if k == j {
                    1.0 / tau_sq
                } else {
                    -it.next().copied().unwrap_or(0.0) / tau_sq
                };
            }
            Ok((row, tau_sq))
        })
        .collect::<Result<_>>()?;

    let mut theta = Matrix::zeros(p, p);
    let mut tau_sq = Vec::with_capacity(p);
    for (j, (row, t)) in rows.into_iter().enumerate() {
        theta.row_mut(j).copy_from_slice(&row);
        tau_sq.push(t);
    }
    Ok(PrecisionEstimate {
        theta,
        lambdas,
        tau_sq,
    })
}
