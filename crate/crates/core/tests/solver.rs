mod common;

use common::*;
use proptest::prelude::*;
use transfarm::numerics::{Matrix, RngStream};
use transfarm::solver::{
    cv_lambda, lasso_fit, nodewise_precision, penalty_level, scaled_lasso, CvOptions,
    LassoOptions, LassoProblem, NodewisePenalty, DEFAULT_NODEWISE_C,
};

fn tight() -> LassoOptions {
    LassoOptions {
        tol: 1e-11,
        max_iter: 1_000_000,
    }
}

fn sparse_instance(seed: u64, n: usize, p: usize, noise: f64) -> (Dense, Vec<f64>) {
    let mut g = Xorshift(seed.wrapping_mul(2654435761).wrapping_add(17));
    let z = g.dense_normal(n, p);
    let beta: Vec<f64> = (0..p).map(|j| if j < 3 { 1.0 - 0.3 * j as f64 } else { 0.0 }).collect();
    let r: Vec<f64> = matvec(&z, &beta)
        .into_iter()
        .map(|v| v + noise * g.normal())
        .collect();
    (z, r)
}

fn mat(d: &Dense) -> Matrix {
    Matrix::from_rows(d).unwrap()
}

#[test]
fn matches_proximal_oracle_on_three_columns() {
    let (z, r) = sparse_instance(1, 20, 3, 0.7);
    let zm = mat(&z);
    let sol = lasso_fit(&LassoProblem::single(&zm, &r, 0.1).unwrap(), &tight(), None).unwrap();
    let reference = ista_lasso(&z, &r, 0.1, 200_000);
    let gap = lasso_objective(&z, &r, 0.1, &sol.coefficients) - lasso_objective(&z, &r, 0.1, &reference);
    assert!(gap.abs() <= 1e-9, "objective gap {gap}");
    assert!(max_abs_diff(&sol.coefficients, &reference) <= 1e-5);
}

#[test]
fn zero_penalty_matches_normal_equations() {
    let (z, r) = sparse_instance(2, 50, 6, 1.0);
    let zm = mat(&z);
    let sol = lasso_fit(&LassoProblem::single(&zm, &r, 0.0).unwrap(), &tight(), None).unwrap();
    let zt = transpose(&z);
    let ols = solve(&matmul(&zt, &z), &matvec(&zt, &r));
    assert!(max_abs_diff(&sol.coefficients, &ols) <= 1e-6);
}

#[test]
fn full_shrinkage_is_exactly_zero_with_blocks() {
    let (z1, r1) = sparse_instance(3, 15, 8, 1.0);
    let (z2, r2) = sparse_instance(4, 25, 8, 1.0);
    let (m1, m2) = (mat(&z1), mat(&z2));
    let base = LassoProblem::new(vec![(&m1, &r1[..]), (&m2, &r2[..])], 0.0).unwrap();
    // independent λ_max: ||(1/N) Σ Z_kᵀ r_k||_∞
    let mut g = [0.0; 8];
    for (z, r) in [(&z1, &r1), (&z2, &r2)] {
        for (gj, v) in g.iter_mut().zip(matvec(&transpose(z), r)) {
            *gj += v / 40.0;
        }
    }
    let lmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((base.lambda_max() - lmax).abs() <= 1e-12);
    let at = LassoProblem::new(vec![(&m1, &r1[..]), (&m2, &r2[..])], base.lambda_max()).unwrap();
    let sol = lasso_fit(&at, &LassoOptions::default(), None).unwrap();
    assert!(sol.coefficients.iter().all(|&c| c == 0.0));
    let below = LassoProblem::new(vec![(&m1, &r1[..]), (&m2, &r2[..])], 0.9 * lmax).unwrap();
    let sol = lasso_fit(&below, &LassoOptions::default(), None).unwrap();
    assert!(sol.coefficients.iter().any(|&c| c != 0.0));
}

#[test]
fn objective_never_increases_between_sweeps() {
    for seed in 0..10 {
        let (z, r) = sparse_instance(10 + seed, 30, 40, 0.5);
        let zm = mat(&z);
        let sol = lasso_fit(&LassoProblem::single(&zm, &r, 0.05).unwrap(), &tight(), None).unwrap();
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "objective rose {} -> {}", w[0], w[1]);
        }
        assert!(sol.kkt_violation <= 1e-11);
    }
}

#[test]
fn warm_start_changes_only_iterations() {
    let opts = LassoOptions::default();
    for seed in 0..20 {
        let (z, r) = sparse_instance(100 + seed, 60, 12, 0.8);
        let zm = mat(&z);
        let pr = LassoProblem::single(&zm, &r, 0.08).unwrap();
        let cold = lasso_fit(&pr, &opts, None).unwrap();
        let mut g = Xorshift(seed + 1);
        let warm0: Vec<f64> = (0..12).map(|_| g.normal()).collect();
        let warm = lasso_fit(&pr, &opts, Some(&warm0)).unwrap();
        assert!(max_abs_diff(&cold.coefficients, &warm.coefficients) <= 1e-5);
        assert!(warm.kkt_violation <= opts.tol);
    }
}

#[test]
fn block_order_does_not_matter() {
    let blocks: Vec<(Matrix, Vec<f64>)> = (0..3)
        .map(|k| {
            let (z, r) = sparse_instance(200 + k, 20 + 5 * k as usize, 10, 1.0);
            (mat(&z), r)
        })
        .collect();
    let forward: Vec<(&Matrix, &[f64])> = blocks.iter().map(|(z, r)| (z, &r[..])).collect();
    let backward: Vec<(&Matrix, &[f64])> = forward.iter().rev().copied().collect();
    let a = lasso_fit(&LassoProblem::new(forward, 0.05).unwrap(), &tight(), None).unwrap();
    let b = lasso_fit(&LassoProblem::new(backward, 0.05).unwrap(), &tight(), None).unwrap();
    assert!(max_abs_diff(&a.coefficients, &b.coefficients) <= 1e-9);
}

#[test]
fn offset_equals_shifted_response() {
    let (z, r) = sparse_instance(300, 40, 7, 0.5);
    let zm = mat(&z);
    let offset = vec![0.3, -0.2, 0.0, 1.0, 0.0, 0.0, 0.4];
    let with = LassoProblem::single(&zm, &r, 0.07).unwrap().with_offset(&offset).unwrap();
    let a = lasso_fit(&with, &tight(), None).unwrap();
    let shifted: Vec<f64> = r.iter().zip(matvec(&z, &offset)).map(|(a, b)| a - b).collect();
    let b = lasso_fit(&LassoProblem::single(&zm, &shifted, 0.07).unwrap(), &tight(), None).unwrap();
    assert!(max_abs_diff(&a.coefficients, &b.coefficients) <= 1e-9);
    assert!((a.objective - with.objective(&a.coefficients)).abs() <= 1e-12);
}

#[test]
fn scaled_lasso_recovers_zero_noise() {
    let (z, r) = sparse_instance(400, 200, 50, 0.0);
    let fit = scaled_lasso(&mat(&z), &r, (2.0 * 50f64.ln() / 200.0).sqrt(), &LassoOptions::default())
        .unwrap();
    assert!(fit.sigma > 0.0 && fit.sigma <= 0.05, "sigma {}", fit.sigma);
}

#[test]
fn scaled_lasso_recovers_unit_noise() {
    let lambda0 = (2.0 * 50f64.ln() / 500.0).sqrt();
    for rep in 0..50 {
        let mut g = Xorshift(7000 + rep);
        let z = g.dense_normal(500, 50);
        let r: Vec<f64> = (0..500).map(|_| g.normal()).collect();
        let fit = scaled_lasso(&mat(&z), &r, lambda0, &LassoOptions::default()).unwrap();
        assert!((0.85..=1.15).contains(&fit.sigma), "rep {rep}: sigma {}", fit.sigma);
    }
}

#[test]
fn scaled_lasso_is_homogeneous() {
    let (z, r) = sparse_instance(500, 80, 30, 1.0);
    let zm = mat(&z);
    let opts = tight();
    let base = scaled_lasso(&zm, &r, 0.3, &opts).unwrap();
    for c in [0.01, 3.0, 250.0] {
        let rc: Vec<f64> = r.iter().map(|v| c * v).collect();
        let fit = scaled_lasso(&zm, &rc, 0.3, &opts).unwrap();
        assert!((fit.sigma / (c * base.sigma) - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn nodewise_without_penalty_inverts_gram() {
    let mut g = Xorshift(900);
    let u = g.dense_normal(200, 5);
    let est = nodewise_precision(&mat(&u), &NodewisePenalty::Fixed(0.0), &tight()).unwrap();
    let gram: Dense = matmul(&transpose(&u), &u)
        .into_iter()
        .map(|row| row.into_iter().map(|v| v / 200.0).collect())
        .collect();
    let inv = inverse(&gram);
    assert!(dense_max_abs_diff(&to_dense(&est.theta), &inv) <= 1e-5);
    assert!(est.diagonal().iter().all(|&d| d > 0.0));
}

#[test]
fn nodewise_auto_rows_satisfy_kkt() {
    let mut g = Xorshift(901);
    let (n, p) = (80, 30);
    let u = g.dense_normal(n, p);
    let opts = LassoOptions::default();
    let est = nodewise_precision(&mat(&u), &NodewisePenalty::default(), &opts).unwrap();
    let cols = transpose(&u);
    for j in 0..p {
        let tau = est.tau_sq[j];
        let gamma: Vec<f64> = (0..p).map(|k| if k == j { 0.0 } else { -est.theta[(j, k)] * tau }).collect();
        let resid: Vec<f64> = (0..n)
            .map(|i| u[i][j] - (0..p).map(|k| u[i][k] * gamma[k]).sum::<f64>())
            .collect();
        let expected_tau = cols[j].iter().zip(&resid).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        assert!((expected_tau - tau).abs() <= 1e-10);
        let lambda = est.lambdas[j];
        let rms = (cols[j].iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        assert!((lambda - DEFAULT_NODEWISE_C * ((p as f64).ln() / n as f64).sqrt() * rms).abs() <= 1e-14);
        for k in (0..p).filter(|&k| k != j) {
            let grad = -cols[k].iter().zip(&resid).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            let v = if gamma[k] > 0.0 {
                (grad + lambda).abs()
            } else if gamma[k] < 0.0 {
                (grad - lambda).abs()
            } else {
                (grad.abs() - lambda).max(0.0)
            };
            assert!(v <= 1e-6, "row {j} column {k}: violation {v}");
        }
    }
}

#[test]
fn penalty_rule_formula() {
    let l = penalty_level(0.5, 2.0, 500, 300);
    assert!((l - 0.5 * 2.0 * (2.0 * 500f64.ln() / 300.0).sqrt()).abs() < 1e-15);
}

#[test]
fn cross_validation_prefers_signal_over_full_shrinkage() {
    let (z, r) = sparse_instance(950, 100, 20, 0.5);
    let res = cv_lambda(&mat(&z), &r, &CvOptions::default(), &LassoOptions::default(), RngStream::new(3, 0))
        .unwrap();
    assert!(res.lambda < res.grid[0]);
    let best = res.mean_error.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(best < res.mean_error[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn returned_solutions_satisfy_kkt(seed in 0u64..10_000, lambda in 0.001f64..0.5) {
        let (z, r) = sparse_instance(seed, 25, 15, 1.0);
        let zm = mat(&z);
        let opts = LassoOptions::default();
        let sol = lasso_fit(&LassoProblem::single(&zm, &r, lambda).unwrap(), &opts, None).unwrap();
        let fit = matvec(&z, &sol.coefficients);
        let resid: Vec<f64> = r.iter().zip(&fit).map(|(a, b)| a - b).collect();
        let grad = matvec(&transpose(&z), &resid);
        for (j, gj) in grad.iter().enumerate() {
            let g = -gj / 25.0;
            let b = sol.coefficients[j];
            let v = if b != 0.0 { (g + lambda * b.signum()).abs() } else { (g.abs() - lambda).max(0.0) };
            prop_assert!(v <= opts.tol * 10.0);
        }
    }

    #[test]
    fn orthogonal_design_soft_thresholds(values in proptest::collection::vec(-3.0f64..3.0, 4), lambda in 0.0f64..2.0) {
        // Z = sqrt(n) I stacked so that ZᵀZ / n = I and Zᵀ r / n = values
        let n = 4;
        let z = Matrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.0 });
        let r: Vec<f64> = values.iter().map(|v| 2.0 * v).collect();
        let sol = lasso_fit(&LassoProblem::single(&z, &r, lambda).unwrap(), &tight(), None).unwrap();
        for (b, v) in sol.coefficients.iter().zip(&values) {
            let expected = v.signum() * (v.abs() - lambda).max(0.0);
            prop_assert!((b - expected).abs() <= 1e-10);
        }
    }
}
