//! Latent factor extraction by principal components of the Gram matrix.
//!
//! For an `n x p` design `X` with `r` factors the estimates are
//!
//! ```text
//! F = sqrt(n) * (top-r eigenvectors of X Xᵀ)
//! B = Fᵀ X / n
//! U = (I - F Fᵀ / n) X
//! ```
//!
//! so that `X = F Bᵀ + U`, `FᵀF / n = I` and `Uᵀ F = 0`. The number of factors
//! is chosen by the eigenvalue-ratio rule unless fixed by the caller.

use crate::error::{Error, Result};
use crate::numerics::{dot, sym_eig, Matrix};

/// Largest candidate rank used when none is given: `min(n / 2, 15)`.
pub fn default_max_rank(n: usize) -> usize {
    (n / 2).min(15)
}

const EIGEN_FLOOR: f64 = 1e-12;

/// How many factors to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSpec {
    /// Eigenvalue-ratio selection over `1..=max` (default bound when `None`).
    Auto { max: Option<usize> },
    Fixed(usize),
}

impl Default for RankSpec {
    fn default() -> Self {
        RankSpec::Auto { max: None }
    }
}

#[derive(Debug, Clone)]
pub struct FactorDecomposition {
    pub rank: usize,
    /// `n x rank`, columns scaled so that `FᵀF / n = I`.
    pub factors: Matrix,
    /// `p x rank`.
    pub loadings: Matrix,
    /// `n x p` idiosyncratic part.
    pub idiosyncratic: Matrix,
    /// Eigenvalues of `X Xᵀ` in descending order (length `n`).
    pub gram_eigenvalues: Vec<f64>,
    pub intercept: bool,
}

impl FactorDecomposition {
    pub fn n(&self) -> usize {
        self.idiosyncratic.rows()
    }

    pub fn p(&self) -> usize {
        self.idiosyncratic.cols()
    }

    /// `(I - F Fᵀ / n) y`
    pub fn residualize(&self, y: &[f64]) -> Result<Vec<f64>> {
        let gamma = self.gamma_hat(y)?;
        let mut out = y.to_vec();
        for (i, o) in out.iter_mut().enumerate() {
            *o -= dot(self.factors.row(i), &gamma);
        }
        Ok(out)
    }

    /// Factor coefficients `Fᵀ y / n`.
    pub fn gamma_hat(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n() {
            return Err(Error::Dimension(format!(
                "response of length {} against {} rows",
                y.len(),
                self.n()
            )));
        }
        let n = self.n() as f64;
        Ok(self
            .factors
            .tmatvec(y)?
            .into_iter()
            .map(|v| v / n)
            .collect())
    }
}

/// Eigenvalue-ratio rank: `argmax_{1 <= i <= max_rank} λ_i / λ_{i+1}`, smallest
/// `i` on ties. Eigenvalues below `1e-12 λ_1` are floored first.
pub fn select_rank(gram_eigenvalues: &[f64], max_rank: usize) -> Result<usize> {
    if max_rank < 1 {
        return Err(Error::InvalidArgument("maximum rank must be at least 1".into()));
    }
    if max_rank + 1 > gram_eigenvalues.len() {
        return Err(Error::InvalidArgument(format!(
            "rank bound {max_rank} needs {} eigenvalues, got {}",
            max_rank + 1,
            gram_eigenvalues.len()
        )));
    }
    let top = gram_eigenvalues[0];
    if !(top > 0.0) {
        return Err(Error::InvalidArgument(
            "leading Gram eigenvalue must be positive".into(),
        ));
    }
    let floor = EIGEN_FLOOR * top;
    let lam = |i: usize| gram_eigenvalues[i].max(floor);
    let mut best = 1;
    let mut best_ratio = f64::NEG_INFINITY;
    for i in 1..=max_rank {
        let ratio = lam(i - 1) / lam(i);
        if ratio > best_ratio {
            best_ratio = ratio;
            best = i;
        }
    }
    Ok(best)
}

/// Factor decomposition of `x`. With `intercept` set, column 0 must be all
/// ones; it is excluded from the factor analysis and kept in `U` unchanged.
pub fn decompose(x: &Matrix, rank: RankSpec, intercept: bool) -> Result<FactorDecomposition> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "factor decomposition needs at least 2 rows, got {n}"
        )));
    }
    if intercept {
        if p == 0 || (0..n).any(|i| x[(i, 0)] != 1.0) {
            return Err(Error::InvalidArgument(
                "intercept requested but column 1 is not constant one".into(),
            ));
        }
        let rest: Vec<usize> = (1..p).collect();
        let inner = decompose_plain(&x.select_cols(&rest), rank)?;
        let r = inner.rank;
        let mut loadings = Matrix::zeros(p, r);
        for j in 1..p {
            loadings.row_mut(j).copy_from_slice(inner.loadings.row(j - 1));
        }
        let mut idiosyncratic = Matrix::zeros(n, p);
        for i in 0..n {
            let row = idiosyncratic.row_mut(i);
            row[0] = 1.0;
            row[1..].copy_from_slice(inner.idiosyncratic.row(i));
        }
        return Ok(FactorDecomposition {
            loadings,
            idiosyncratic,
            intercept: true,
            ..inner
        });
    }
    decompose_plain(x, rank)
}

fn decompose_plain(x: &Matrix, rank: RankSpec) -> Result<FactorDecomposition> {
    let (n, p) = x.shape();
    let basis = GramBasis::new(x)?;
    let r = match rank {
        RankSpec::Fixed(r) => {
            if r > n.min(p) {
                return Err(Error::InvalidArgument(format!(
                    "rank {r} exceeds min(n, p) = {}",
                    n.min(p)
                )));
            }
            r
        }
        RankSpec::Auto { max } => {
            let bound = max.unwrap_or_else(|| default_max_rank(n)).max(1);
            select_rank(&basis.eigenvalues, bound)?.min(n.min(p))
        }
    };

    let sqrt_n = (n as f64).sqrt();
    let factors = basis.top_vectors(x, r)?.scaled(sqrt_n);

    // B = Fᵀ X / n, stored p x r
    let mut loadings = Matrix::zeros(p, r);
    for i in 0..n {
        let xi = x.row(i);
        let fi = factors.row(i);
        for (j, &xij) in xi.iter().enumerate() {
            let lj = loadings.row_mut(j);
            for (l, &f) in lj.iter_mut().zip(fi) {
                *l += f * xij;
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    let loadings = loadings.scaled(inv_n);

    let mut idiosyncratic = x.clone();
    if r > 0 {
        for i in 0..n {
            let fi = factors.row(i);
            let row = idiosyncratic.row_mut(i);
            for (j, u) in row.iter_mut().enumerate() {
                *u -= dot(fi, loadings.row(j));
            }
        }
    }

    Ok(FactorDecomposition {
        rank: r,
        factors,
        loadings,
        idiosyncratic,
        gram_eigenvalues: basis.eigenvalues,
        intercept: false,
    })
}

/// Spectrum of `X Xᵀ`, computed from whichever of `X Xᵀ` and `Xᵀ X` is
/// smaller. Both share their nonzero eigenvalues; the dual route maps
/// eigenvectors back through `u = X v / sqrt(λ)`.
struct GramBasis {
    eigenvalues: Vec<f64>,
    dual: Option<Matrix>,
    primal: Option<Matrix>,
}

impl GramBasis {
    fn new(x: &Matrix) -> Result<Self> {
        let (n, p) = x.shape();
        if p < n {
            let e = sym_eig(&x.gram_cols(), None)?;
            let mut eigenvalues = e.values;
            eigenvalues.resize(n, 0.0);
            Ok(GramBasis {
                eigenvalues,
                dual: Some(e.vectors),
                primal: None,
            })
        } else {
            let e = sym_eig(&x.gram_rows(), None)?;
            Ok(GramBasis {
                eigenvalues: e.values,
                dual: None,
                primal: Some(e.vectors),
            })
        }
    }

    /// Unit-norm top-`r` eigenvectors of `X Xᵀ` as an `n x r` matrix.
    fn top_vectors(&self, x: &Matrix, r: usize) -> Result<Matrix> {
        let n = x.rows();
        if let Some(v) = &self.primal {
            return Ok(v.select_cols(&(0..r).collect::<Vec<_>>()));
        }
        let v = self.dual.as_ref().expect("one route is always present");
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        if r > 0 && !(self.eigenvalues[r - 1] > EIGEN_FLOOR * top) {
            // requested rank reaches the null space; the dual map is undefined
            let e = sym_eig(&x.gram_rows(), Some(r))?;
            return Ok(e.vectors);
        }
        let mut out = Matrix::zeros(n, r);
        for k in 0..r {
            let vk = v.col(k);
            let mut u = x.matvec(&vk)?;
            let norm = crate::numerics::norm2(&u);
            u.iter_mut().for_each(|t| *t /= norm);
            let mut lead = 0;
            for (i, t) in u.iter().enumerate() {
                if t.abs() > u[lead].abs() {
                    lead = i;
                }
            }
            let sign = if u[lead] < 0.0 { -1.0 } else { 1.0 };
            for (i, t) in u.iter().enumerate() {
                out[(i, k)] = sign * t;
            }
        }
        Ok(out)
    }
}
