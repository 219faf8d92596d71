use crate::error::{Error, Result};
use crate::numerics::{shuffled_folds, Matrix, RngStream};
use crate::solver::lasso::{lasso_fit, LassoOptions, LassoProblem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    /// Number of log-spaced penalties from `lambda_max` downwards.
    pub grid_size: usize,
    pub folds: usize,
    /// Smallest grid value as a fraction of `lambda_max`.
    pub min_ratio: f64,
    /// Pick the largest penalty within one standard error of the best.
    pub one_se: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            grid_size: 30,
            folds: 5,
            min_ratio: 1e-3,
            one_se: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub lambda: f64,
    /// Descending penalty grid.
    pub grid: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub std_error: Vec<f64>,
}

/// K-fold cross-validated penalty for the single-block lasso of `r` on `z`.
/// Each fold walks the grid from the largest penalty down with warm starts.
pub fn cv_lambda(
    z: &Matrix,
    r: &[f64],
    cv: &CvOptions,
    options: &LassoOptions,
    stream: RngStream,
) -> Result<CvResult> {
    if cv.grid_size < 1 || !(cv.min_ratio > 0.0 && cv.min_ratio < 1.0) {
        return Err(Error::InvalidArgument(
            "grid needs at least one point and a ratio in (0, 1)".into(),
        ));
    }
    let lambda_max = LassoProblem::single(z, r, 0.0)?.lambda_max();
    if !(lambda_max > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let grid: Vec<f64> = (0..cv.grid_size)
        .map(|i| {
            let t = if cv.grid_size == 1 {
                0.0
            } else {
                i as f64 / (cv.grid_size - 1) as f64
            };
            lambda_max * cv.min_ratio.powf(t)
        })
        .collect();
    let folds = shuffled_folds(stream, z.rows(), cv.folds)?;
    let mut errors = vec![vec![0.0; cv.folds]; grid.len()];
    for (f, held) in folds.iter().enumerate() {
        let train: Vec<usize> = (0..z.rows()).filter(|i| held.binary_search(i).is_err()).collect();
        let zt = z.select_rows(&train);
        let rt: Vec<f64> = train.iter().map(|&i| r[i]).collect();
        let zh = z.select_rows(held);
        let mut warm: Option<Vec<f64>> = None;
        for (g, &lambda) in grid.iter().enumerate() {
            let problem = LassoProblem::single(&zt, &rt, lambda)?;
            let sol = lasso_fit(&problem, options, warm.as_deref())?;
            let pred = zh.matvec(&sol.coefficients)?;
            let mse = held
                .iter()
                .zip(&pred)
                .map(|(&i, p)| (r[i] - p).powi(2))
                .sum::<f64>()
                / held.len() as f64;
            errors[g][f] = mse;
            warm = Some(sol.coefficients);
        }
    }
    let k = cv.folds as f64;
    let mean_error: Vec<f64> = errors.iter().map(|e| e.iter().sum::<f64>() / k).collect();
    let std_error: Vec<f64> = errors
        .iter()
        .zip(&mean_error)
        .map(|(e, m)| {
            let var = e.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        })
        .collect();
    let mut best = 0;
    for g in 1..grid.len() {
        if mean_error[g] < mean_error[best] {
            best = g;
        }
    }
    let chosen = if cv.one_se {
        let bound = mean_error[best] + std_error[best];
        (0..=best).find(|&g| mean_error[g] <= bound).unwrap_or(best)
    } else {
        best
    };
    Ok(CvResult {
        lambda: grid[chosen],
        grid,
        mean_error,
        std_error,
    })
}
