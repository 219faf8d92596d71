//! Independent brute-force oracles shared by the integration tests. Nothing
//! here calls into the library's solvers.
#![allow(dead_code, clippy::needless_range_loop)]

pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(m: &transfarm::numerics::Matrix) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    let n = a.len();
    let m = a[0].len();
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

pub fn matvec(a: &Dense, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(a: &Dense) -> f64 {
    let n = a.len();
    let mut m = a.clone();
    let mut d = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        if m[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

/// Inverse by Gauss-Jordan elimination.
pub fn inverse(a: &Dense) -> Dense {
    let n = a.len();
    let mut m: Dense = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(piv, c);
        let d = m[c][c];
        for k in 0..2 * n {
            m[c][k] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                for k in 0..2 * n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Solve `a x = b` for square `a`.
pub fn solve(a: &Dense, b: &[f64]) -> Vec<f64> {
    matvec(&inverse(a), b)
}

/// Characteristic polynomial coefficients `c[0..=n]` of `det(tI - A)` via the
/// Faddeev-LeVerrier recursion, `c[n] = 1`.
pub fn char_poly(a: &Dense) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = matmul(a, &m);
        for i in 0..n {
            next[i][i] += c[n - k + 1];
        }
        let am = matmul(a, &next);
        let tr: f64 = (0..n).map(|i| am[i][i]).sum();
        c[n - k] = -tr / k as f64;
        m = next;
    }
    c
}

fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &x| acc * t + x)
}

/// All real roots of the characteristic polynomial of a symmetric matrix,
/// descending, found by grid scan plus bisection inside the Gershgorin bound.
pub fn char_poly_eigenvalues(a: &Dense) -> Vec<f64> {
    let n = a.len();
    let c = char_poly(a);
    let bound = (0..n)
        .map(|i| a[i].iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let steps = 200_000;
    let h = 2.0 * bound / steps as f64;
    let mut roots = Vec::new();
    let mut prev_t = -bound;
    let mut prev_v = poly_eval(&c, prev_t);
    for s in 1..=steps {
        let t = -bound + s as f64 * h;
        let v = poly_eval(&c, t);
        if v == 0.0 {
            roots.push(t);
        } else if prev_v.signum() != v.signum() && prev_v != 0.0 {
            let (mut lo, mut hi) = (prev_t, t);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let vm = poly_eval(&c, mid);
                if vm.signum() == poly_eval(&c, lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_t = t;
        prev_v = v;
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    roots
}

/// Unit null-space vector of `A - lambda I` for a simple eigenvalue: the
/// largest column of the adjugate, built from cofactor determinants.
pub fn null_vector(a: &Dense, lambda: f64) -> Vec<f64> {
    let n = a.len();
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[i][i] -= lambda;
    }
    let minor = |skip_r: usize, skip_c: usize| -> Dense {
        (0..n)
            .filter(|&r| r != skip_r)
            .map(|r| {
                (0..n)
                    .filter(|&c| c != skip_c)
                    .map(|c| shifted[r][c])
                    .collect()
            })
            .collect()
    };
    let mut best: Vec<f64> = vec![0.0; n];
    let mut best_norm = -1.0;
    for col in 0..n {
        // adj[i][col] = (-1)^{i+col} det(minor(col, i))
        let v: Vec<f64> = (0..n)
            .map(|i| {
                let s = if (i + col) % 2 == 0 { 1.0 } else { -1.0 };
                s * det(&minor(col, i))
            })
            .collect();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv > best_norm {
            best_norm = nv;
            best = v;
        }
    }
    let scale = 1.0 / best_norm;
    let mut v: Vec<f64> = best.iter().map(|x| x * scale).collect();
    // same sign convention as the library: largest-magnitude entry positive
    let mut lead = 0;
    for i in 0..n {
        if v[i].abs() > v[lead].abs() {
            lead = i;
        }
    }
    if v[lead] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Proximal (soft-threshold) subgradient reference for the lasso objective
/// `(1/2N)||r - Z b||^2 + lambda ||b||_1`, fixed step `1/L`.
pub fn ista_lasso(z: &Dense, r: &[f64], lambda: f64, iters: usize) -> Vec<f64> {
    let n = z.len() as f64;
    let p = z[0].len();
    let zt = transpose(z);
    // Lipschitz constant of the smooth part via power iteration on ZᵀZ/N
    let gram = matmul(&zt, z);
    let mut v = vec![1.0; p];
    let mut lip = 0.0;
    for _ in 0..500 {
        let w = matvec(&gram, &v);
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        lip = nw / n;
        v = w.iter().map(|x| x / nw).collect();
    }
    let step = 1.0 / lip;
    let mut b = vec![0.0; p];
    for _ in 0..iters {
        let fit = matvec(z, &b);
        let resid: Vec<f64> = r.iter().zip(&fit).map(|(a, f)| a - f).collect();
        let grad: Vec<f64> = matvec(&zt, &resid).iter().map(|g| -g / n).collect();
        for j in 0..p {
            let u = b[j] - step * grad[j];
            b[j] = u.signum() * (u.abs() - step * lambda).max(0.0);
        }
    }
    b
}

pub fn lasso_objective(z: &Dense, r: &[f64], lambda: f64, b: &[f64]) -> f64 {
    let n = z.len() as f64;
    let fit = matvec(z, b);
    let rss: f64 = r.iter().zip(&fit).map(|(a, f)| (a - f) * (a - f)).sum();
    rss / (2.0 * n) + lambda * b.iter().map(|x| x.abs()).sum::<f64>()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn dense_max_abs_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| max_abs_diff(x, y))
        .fold(0.0, f64::max)
}

/// Small deterministic generator for oracle-side randomness, so
/// oracles do not depend on the library's streams.
pub struct Xorshift(pub u64);

impl Xorshift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Box-Muller normal.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn dense_normal(&mut self, rows: usize, cols: usize) -> Dense {
        (0..rows)
            .map(|_| (0..cols).map(|_| self.normal()).collect())
            .collect()
    }
}

/// Exact lasso solution on the support and signs of an approximate one:
/// solves `(Z_SᵀZ_S/N) b_S = Z_Sᵀr/N - lambda sign(b_S)`. Panics if the
/// result violates the KKT conditions, so the support guess must be right.
pub fn polish_lasso(z: &Dense, r: &[f64], lambda: f64, approx: &[f64]) -> Vec<f64> {
    let n = z.len() as f64;
    let p = approx.len();
    let support: Vec<usize> = (0..p).filter(|&j| approx[j].abs() > 1e-6).collect();
    let mut b = vec![0.0; p];
    if !support.is_empty() {
        let zs: Dense = z.iter().map(|row| support.iter().map(|&j| row[j]).collect()).collect();
        let zst = transpose(&zs);
        let gram: Dense = matmul(&zst, &zs)
            .into_iter()
            .map(|row| row.into_iter().map(|v| v / n).collect())
            .collect();
        let rhs: Vec<f64> = matvec(&zst, r)
            .iter()
            .zip(&support)
            .map(|(v, &j)| v / n - lambda * approx[j].signum())
            .collect();
        for (&j, v) in support.iter().zip(solve(&gram, &rhs)) {
            assert!(v.signum() == approx[j].signum(), "sign flip at {j}");
            b[j] = v;
        }
    }
    let fit = matvec(z, &b);
    let resid: Vec<f64> = r.iter().zip(&fit).map(|(a, f)| a - f).collect();
    let grad = matvec(&transpose(z), &resid);
    for j in 0..p {
        if b[j] == 0.0 {
            assert!((grad[j] / n).abs() <= lambda * (1.0 + 1e-9), "KKT violated at {j}");
        }
    }
    b
}
