mod common;

use common::*;
use transfarm::numerics::{
    mvn_toeplitz, standard_normal_matrix, sym_eig, Matrix, RngStream,
};

fn random_symmetric(seed: u64, n: usize) -> Matrix {
    let mut g = Xorshift(seed);
    let a = g.dense_normal(n, n);
    Matrix::from_fn(n, n, |i, j| a[i][j] + a[j][i])
}

#[test]
fn jacobi_matches_characteristic_polynomial_oracle() {
    for seed in [11u64, 12, 13, 14] {
        let a = random_symmetric(seed, 6);
        let dense = to_dense(&a);
        let oracle_vals = char_poly_eigenvalues(&dense);
        assert_eq!(oracle_vals.len(), 6, "oracle must find six real roots");
        let r = sym_eig(&a, None).unwrap();
        assert!(max_abs_diff(&r.values, &oracle_vals) <= 1e-8);
        for (k, &lambda) in oracle_vals.iter().enumerate() {
            let v = null_vector(&dense, lambda);
            assert!(max_abs_diff(&r.vectors.col(k), &v) <= 1e-7, "vector {k}");
        }
    }
}

#[test]
fn residual_orthonormality_and_trace() {
    for seed in [1u64, 2, 3] {
        let a = random_symmetric(seed, 40);
        let r = sym_eig(&a, None).unwrap();
        let v = &r.vectors;
        assert!(r.values.windows(2).all(|w| w[0] >= w[1]));
        let vtv = v.transpose().matmul(v).unwrap();
        assert!(vtv.sub(&Matrix::identity(40)).unwrap().max_abs() <= 1e-8);
        let av = a.matmul(v).unwrap();
        let vl = v.matmul(&Matrix::diag(&r.values)).unwrap();
        assert!(av.sub(&vl).unwrap().max_abs() <= 1e-7 * a.max_abs());
        let trace: f64 = (0..40).map(|i| a[(i, i)]).sum();
        let sum: f64 = r.values.iter().sum();
        assert!((trace - sum).abs() <= 1e-7 * trace.abs().max(1.0));
    }
}

#[test]
fn eigensolver_is_deterministic() {
    let a = random_symmetric(99, 25);
    let r1 = sym_eig(&a, Some(5)).unwrap();
    let r2 = sym_eig(&a, Some(5)).unwrap();
    assert_eq!(r1.values, r2.values);
    assert_eq!(r1.vectors, r2.vectors);
}

#[test]
fn normal_moments() {
    let m = standard_normal_matrix(RngStream::new(2024, 0), 1000, 100).unwrap();
    let xs = m.as_slice();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert!((var - 1.0).abs() < 0.02, "var {var}");
}

#[test]
fn distinct_streams_are_uncorrelated() {
    let a = standard_normal_matrix(RngStream::new(5, 0), 10_000, 1).unwrap();
    let b = standard_normal_matrix(RngStream::new(5, 1), 10_000, 1).unwrap();
    let (a, b) = (a.as_slice(), b.as_slice());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    let corr = cov / (va * vb).sqrt();
    assert!(corr.abs() < 0.05, "corr {corr}");
}

fn empirical_cov(x: &Matrix) -> Matrix {
    let n = x.rows() as f64;
    x.gram_cols().scaled(1.0 / n)
}

#[test]
fn mvn_identity_covariance_moments() {
    let x = mvn_toeplitz(RngStream::new(8, 3), 20_000, &Matrix::identity(5)).unwrap();
    let c = empirical_cov(&x);
    assert!(c.sub(&Matrix::identity(5)).unwrap().max_abs() < 0.03);
}

#[test]
fn mvn_toeplitz_covariance_oracle() {
    let cov = Matrix::toeplitz_power(20, 0.5);
    let x = mvn_toeplitz(RngStream::new(77, 1), 50_000, &cov).unwrap();
    let c = empirical_cov(&x);
    let err = c.sub(&cov).unwrap().max_abs();
    assert!(err < 0.03, "max-abs covariance error {err}");
}
