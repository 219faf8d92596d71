use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix};

/// Pooled lasso over row blocks sharing `p` columns:
///
/// ```text
/// minimize (1/2N) Σ_k ||r_k - Z_k (offset + δ)||² + λ ||δ||₁
/// ```
///
/// with `N` the total row count. Without an offset this is the plain lasso
/// in `δ`.
#[derive(Debug, Clone)]
pub struct LassoProblem<'a> {
    blocks: Vec<(&'a Matrix, &'a [f64])>,
    lambda: f64,
    offset: Option<&'a [f64]>,
    p: usize,
    n_total: usize,
}

impl<'a> LassoProblem<'a> {
    pub fn new(blocks: Vec<(&'a Matrix, &'a [f64])>, lambda: f64) -> Result<Self> {
        let Some((first, _)) = blocks.first() else {
            return Err(Error::InvalidArgument("lasso needs at least one block".into()));
        };
        let p = first.cols();
        for (k, (z, r)) in blocks.iter().enumerate() {
            if z.cols() != p {
                return Err(Error::Dimension(format!(
                    "block {k} has {} columns, expected {p}",
                    z.cols()
                )));
            }
            if z.rows() != r.len() {
                return Err(Error::Dimension(format!(
                    "block {k}: {} rows but response of length {}",
                    z.rows(),
                    r.len()
                )));
            }
        }
        let n_total = blocks.iter().map(|(z, _)| z.rows()).sum();
        if n_total == 0 {
            return Err(Error::InvalidArgument("lasso needs at least one row".into()));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("penalty must be >= 0, got {lambda}")));
        }
        Ok(LassoProblem {
            blocks,
            lambda,
            offset: None,
            p,
            n_total,
        })
    }

    pub fn single(z: &'a Matrix, r: &'a [f64], lambda: f64) -> Result<Self> {
        LassoProblem::new(vec![(z, r)], lambda)
    }

    pub fn with_offset(mut self, offset: &'a [f64]) -> Result<Self> {
        if offset.len() != self.p {
            return Err(Error::Dimension(format!(
                "offset of length {} for {} columns",
                offset.len(),
                self.p
            )));
        }
        self.offset = Some(offset);
        Ok(self)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Smallest penalty at which the zero vector is optimal:
    /// `||(1/N) Σ Z_kᵀ (r_k - Z_k offset)||_∞`.
    pub fn lambda_max(&self) -> f64 {
        let design = StackedDesign::from_problem(self);
        let resid = design.initial_residual(self.offset);
        // same arithmetic as the coordinate update so that λ = λ_max zeroes exactly
        let inv_n = 1.0 / self.n_total as f64;
        (0..self.p)
            .map(|j| (dot(design.col(j), &resid) * inv_n).abs())
            .fold(0.0, f64::max)
    }

    /// Objective value at `delta`.
    pub fn objective(&self, delta: &[f64]) -> f64 {
        let design = StackedDesign::from_problem(self);
        let resid = design.residual(self.offset, delta);
        objective_value(&resid, delta, self.lambda, self.n_total)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LassoOptions {
    /// Bound on both the largest coefficient change of a sweep and the KKT
    /// violation at return.
    pub tol: f64,
    /// Maximum number of coordinate sweeps.
    pub max_iter: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            tol: 1e-7,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LassoSolution {
    pub coefficients: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_violation: f64,
    /// Objective after every sweep, starting with the initial point.
    pub objective_trace: Vec<f64>,
}

pub fn lasso_fit(
    problem: &LassoProblem<'_>,
    options: &LassoOptions,
    warm_start: Option<&[f64]>,
) -> Result<LassoSolution> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if let Some(w) = warm_start {
        if w.len() != problem.p {
            return Err(Error::Dimension(format!(
                "warm start of length {} for {} columns",
                w.len(),
                problem.p
            )));
        }
    }
    let design = StackedDesign::from_problem(problem);
    let cols: Vec<&[f64]> = (0..problem.p).map(|j| design.col(j)).collect();
    let resid = design.initial_residual(problem.offset);
    coordinate_descent(&cols, &resid, problem.lambda, warm_start, options)
}

/// Column-major copy of the stacked blocks.
pub(crate) struct StackedDesign {
    n: usize,
    p: usize,
    data: Vec<f64>,
    response: Vec<f64>,
}

impl StackedDesign {
    fn from_problem(problem: &LassoProblem<'_>) -> Self {
        let n = problem.n_total;
        let p = problem.p;
        let mut data = vec![0.0; n * p];
        let mut response = Vec::with_capacity(n);
        let mut row = 0;
        for (z, r) in &problem.blocks {
            for i in 0..z.rows() {
                for (j, &v) in z.row(i).iter().enumerate() {
                    data[j * n + row] = v;
                }
                row += 1;
            }
            response.extend_from_slice(r);
        }
        StackedDesign {
            n,
            p,
            data,
            response,
        }
    }

    /// Column-major copy of a single matrix.
    pub(crate) fn from_matrix(z: &Matrix) -> Self {
        let (n, p) = z.shape();
        let mut data = vec![0.0; n * p];
        for i in 0..n {
            for (j, &v) in z.row(i).iter().enumerate() {
                data[j * n + i] = v;
            }
        }
        StackedDesign {
            n,
            p,
            data,
            response: Vec::new(),
        }
    }

    #[inline]
    pub(crate) fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    fn initial_residual(&self, offset: Option<&[f64]>) -> Vec<f64> {
        let mut resid = self.response.clone();
        if let Some(o) = offset {
            for (j, &oj) in o.iter().enumerate() {
                if oj != 0.0 {
                    axpy(-oj, self.col(j), &mut resid);
                }
            }
        }
        resid
    }

    fn residual(&self, offset: Option<&[f64]>, delta: &[f64]) -> Vec<f64> {
        let mut resid = self.initial_residual(offset);
        for j in 0..self.p {
            if delta[j] != 0.0 {
                axpy(-delta[j], self.col(j), &mut resid);
            }
        }
        resid
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

fn objective_value(resid: &[f64], delta: &[f64], lambda: f64, n: usize) -> f64 {
    dot(resid, resid) / (2.0 * n as f64) + lambda * delta.iter().map(|d| d.abs()).sum::<f64>()
}

/// Cyclic coordinate descent with active-set passes.
///
/// `cols` are the design columns (each of length `N`), `base_resid` the
/// response after subtracting any offset. Full sweeps alternate with sweeps
/// restricted to the nonzero coordinates; convergence requires a full sweep
/// whose largest change is below `tol` and a KKT violation below `tol`,
/// computed from a freshly recomputed residual.
pub(crate) fn coordinate_descent(
    cols: &[&[f64]],
    base_resid: &[f64],
    lambda: f64,
    warm_start: Option<&[f64]>,
    options: &LassoOptions,
) -> Result<LassoSolution> {
    let p = cols.len();
    let n = base_resid.len();
    let inv_n = 1.0 / n as f64;
    let sq: Vec<f64> = cols.iter().map(|c| dot(c, c) * inv_n).collect();

    let mut delta = warm_start.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    let fresh_residual = |delta: &[f64]| {
        let mut r = base_resid.to_vec();
        for (j, &d) in delta.iter().enumerate() {
            if d != 0.0 {
                axpy(-d, cols[j], &mut r);
            }
        }
        r
    };
    let mut resid = fresh_residual(&delta);
    let mut trace = vec![objective_value(&resid, &delta, lambda, n)];

    let sweep = |delta: &mut [f64], resid: &mut [f64], active_only: bool| -> f64 {
        let mut max_change = 0.0f64;
        for j in 0..p {
            if sq[j] == 0.0 || (active_only && delta[j] == 0.0) {
                continue;
            }
            let old = delta[j];
            let z = dot(cols[j], resid) * inv_n + sq[j] * old;
            let new = soft_threshold(z, lambda) / sq[j];
            if new != old {
                axpy(old - new, cols[j], resid);
                delta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        max_change
    };

    let mut iterations = 0;
    let mut kkt = f64::INFINITY;
    while iterations < options.max_iter {
        let change = sweep(&mut delta, &mut resid, false);
        iterations += 1;
        trace.push(objective_value(&resid, &delta, lambda, n));
        if change < options.tol {
            resid = fresh_residual(&delta);
            kkt = kkt_violation(cols, &resid, &delta, lambda, &sq);
            if kkt <= options.tol {
                let objective = objective_value(&resid, &delta, lambda, n);
                return Ok(LassoSolution {
                    coefficients: delta,
                    objective,
                    iterations,
                    kkt_violation: kkt,
                    objective_trace: trace,
                });
            }
            continue;
        }
        // settle the active set before the next full pass
        while iterations < options.max_iter {
            let change = sweep(&mut delta, &mut resid, true);
            iterations += 1;
            trace.push(objective_value(&resid, &delta, lambda, n));
            if change < options.tol {
                break;
            }
        }
    }
    if kkt.is_infinite() {
        resid = fresh_residual(&delta);
        kkt = kkt_violation(cols, &resid, &delta, lambda, &sq);
    }
    Err(Error::LassoNotConverged {
        iterations,
        kkt_violation: kkt,
        best: delta,
    })
}

fn kkt_violation(cols: &[&[f64]], resid: &[f64], delta: &[f64], lambda: f64, sq: &[f64]) -> f64 {
    let inv_n = 1.0 / resid.len() as f64;
    let mut worst = 0.0f64;
    for (j, col) in cols.iter().enumerate() {
        if sq[j] == 0.0 {
            continue;
        }
        // gradient of the smooth part
        let g = -dot(col, resid) * inv_n;
        let v = if delta[j] > 0.0 {
            (g + lambda).abs()
        } else if delta[j] < 0.0 {
            (g - lambda).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}
