//! Cyclic Jacobi eigensolver for dense symmetric matrices.
//!
//! Every rotation annihilates one off-diagonal pair; the accumulated rotations
//! form the eigenvector matrix. Sweeps continue until the off-diagonal
//! Frobenius norm falls below `OFF_DIAGONAL_TOL` relative to the input norm.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenpairs sorted by descending eigenvalue. Column `i` of `vectors` belongs
/// to `values[i]`.
#[derive(Debug, Clone)]
pub struct SymEigResult {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Eigendecomposition of a symmetric matrix, keeping the `top_k` largest
/// eigenvalues (all when `None`).
///
/// Each eigenvector is signed so that its entry of largest magnitude is
/// positive, taking the first such entry on ties.
pub fn sym_eig(a: &Matrix, top_k: Option<usize>) -> Result<SymEigResult> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::Dimension(format!(
            "eigendecomposition of a {}x{} matrix",
            n,
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("eigensolver input"));
    }
    let scale = a.max_abs();
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    let k = top_k.unwrap_or(n).min(n);

    // Work on the symmetrised copy so the rotation updates can mirror rows
    // into columns.
    let mut w = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    // Rows of `vt` are eigenvectors.
    let mut vt = Matrix::identity(n);
    let total = w.frobenius();
    let target = OFF_DIAGONAL_TOL * total;

    let mut converged = n <= 1 || off_diagonal_norm(&w) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut w, &mut vt, p, q);
            }
        }
        converged = off_diagonal_norm(&w) <= target;
    }
    if !converged {
        return Err(Error::EigenNotConverged {
            sweeps,
            residual: off_diagonal_norm(&w),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their diagonal order
    order.sort_by(|&i, &j| w[(j, j)].total_cmp(&w[(i, i)]));
    order.truncate(k);

    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, k);
    for (c, &i) in order.iter().enumerate() {
        let v = vt.row(i);
        let mut lead = 0;
        for (idx, x) in v.iter().enumerate() {
            if x.abs() > v[lead].abs() {
                lead = idx;
            }
        }
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for (r, &x) in v.iter().enumerate() {
            vectors[(r, c)] = sign * x;
        }
    }
    Ok(SymEigResult { values, vectors })
}

fn off_diagonal_norm(w: &Matrix) -> f64 {
    let n = w.rows();
    let mut s = 0.0;
    for i in 0..n {
        for (j, x) in w.row(i).iter().enumerate() {
            if j != i {
                s += x * x;
            }
        }
    }
    s.sqrt()
}

#[inline]
fn rotate(w: &mut Matrix, vt: &mut Matrix, p: usize, q: usize) {
    let apq = w[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = w[(p, p)];
    let aqq = w[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_finite() {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    } else {
        // |theta| overflowed: the pair is already numerically diagonal
        0.5 / theta
    };
    if t == 0.0 {
        w[(p, q)] = 0.0;
        w[(q, p)] = 0.0;
        return;
    }
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = w.rows();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = w[(k, p)];
        let akq = w[(k, q)];
        let nkp = c * akp - s * akq;
        let nkq = s * akp + c * akq;
        w[(k, p)] = nkp;
        w[(p, k)] = nkp;
        w[(k, q)] = nkq;
        w[(q, k)] = nkq;
    }
    w[(p, p)] = app - t * apq;
    w[(q, q)] = aqq + t * apq;
    w[(p, q)] = 0.0;
    w[(q, p)] = 0.0;

    let (rp, rq) = vt.two_rows_mut(p, q);
    for (vp, vq) in rp.iter_mut().zip(rq.iter_mut()) {
        let a = *vp;
        let b = *vq;
        *vp = c * a - s * b;
        *vq = s * a + c * b;
    }
}
