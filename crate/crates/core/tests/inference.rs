#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use proptest::prelude::*;
use transfarm::factor::{decompose, FactorDecomposition, RankSpec};
use transfarm::inference::{
    adequacy_test, debias, multiplier_bootstrap, quantile, simultaneous_cis, InferenceInputs,
};
use transfarm::numerics::{Matrix, RngStream};
use transfarm::solver::PrecisionEstimate;
use transfarm::transfer::{Mode, TransferFit};

fn fit_with(beta: Vec<f64>) -> TransferFit {
    TransferFit {
        w_hat: beta.clone(),
        delta_hat: vec![0.0; beta.len()],
        beta_hat: beta,
        source_set: Vec::new(),
        lambda_w: 0.0,
        lambda_delta: 0.0,
        sigma_hat: Some(1.0),
        target_rank: 0,
        source_ranks: Vec::new(),
        mode: Mode::PlainLasso,
    }
}

fn identity_decomp(u: &Dense) -> FactorDecomposition {
    decompose(&Matrix::from_rows(u).unwrap(), RankSpec::Fixed(0), false).unwrap()
}

fn precision(theta: Dense) -> PrecisionEstimate {
    let p = theta.len();
    PrecisionEstimate {
        theta: Matrix::from_rows(&theta).unwrap(),
        lambdas: vec![0.0; p],
        tau_sq: vec![1.0; p],
    }
}

fn random_precision(g: &mut Xorshift, p: usize) -> Dense {
    // A Aᵀ/p + I: symmetric with a positive, unequal diagonal
    let a = g.dense_normal(p, p);
    let mut t = matmul(&a, &transpose(&a));
    for (i, row) in t.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v /= p as f64;
        }
        row[i] += 1.0;
    }
    t
}

struct Instance {
    u: Dense,
    y: Vec<f64>,
    beta_hat: Vec<f64>,
    theta: Dense,
}

fn instance(seed: u64, n: usize, p: usize) -> Instance {
    let mut g = Xorshift(seed);
    let u = g.dense_normal(n, p);
    let y: Vec<f64> = (0..n).map(|i| u[i][0] - 0.5 * u[i][1] + g.normal()).collect();
    let beta_hat: Vec<f64> = (0..p).map(|j| if j < 2 { 0.8 - 0.9 * j as f64 } else { 0.0 }).collect();
    let theta = random_precision(&mut g, p);
    Instance { u, y, beta_hat, theta }
}

#[test]
fn debias_matches_dense_recomputation() {
    let inst = instance(31, 60, 8);
    let d = identity_decomp(&inst.u);
    let got = debias(&fit_with(inst.beta_hat.clone()), &d, &inst.y, &precision(inst.theta.clone())).unwrap();
    let resid: Vec<f64> = inst
        .y
        .iter()
        .zip(matvec(&inst.u, &inst.beta_hat))
        .map(|(a, b)| a - b)
        .collect();
    // Θ (Uᵀ r) / n as one matrix product
    let m = matmul(&inst.theta, &transpose(&inst.u));
    let corr = matvec(&m, &resid);
    let want: Vec<f64> = inst.beta_hat.iter().zip(&corr).map(|(b, c)| b + c / 60.0).collect();
    assert!(max_abs_diff(&got, &want) <= 1e-10);
}

#[test]
fn debias_trivial_cases() {
    let inst = instance(32, 40, 6);
    let d = identity_decomp(&inst.u);
    let zero = precision(vec![vec![0.0; 6]; 6]);
    let fit = fit_with(inst.beta_hat.clone());
    assert_eq!(debias(&fit, &d, &inst.y, &zero).unwrap(), inst.beta_hat);
    let exact = matvec(&inst.u, &inst.beta_hat);
    let out = debias(&fit, &d, &exact, &precision(inst.theta.clone())).unwrap();
    assert!(max_abs_diff(&out, &inst.beta_hat) <= 1e-14);
    assert!(debias(&fit, &d, &inst.y[..39], &zero).is_err());
}

fn orthonormal_scaled(g: &mut Xorshift, n: usize, p: usize) -> Dense {
    // Gram-Schmidt on columns, then scaled so that UᵀU = n I
    let mut cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| g.normal()).collect()).collect();
    for j in 0..p {
        for k in 0..j {
            let proj: f64 = (0..n).map(|i| cols[j][i] * cols[k][i]).sum();
            for i in 0..n {
                cols[j][i] -= proj * cols[k][i];
            }
        }
        let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in cols[j].iter_mut() {
            *v /= norm;
        }
    }
    let s = (n as f64).sqrt();
    (0..n).map(|i| (0..p).map(|j| s * cols[j][i]).collect()).collect()
}

#[test]
fn bootstrap_max_matches_gaussian_max() {
    let mut g = Xorshift(91);
    let (n, p) = (200, 20);
    let u = Matrix::from_rows(&orthonormal_scaled(&mut g, n, p)).unwrap();
    let identity: Dense = (0..p).map(|i| (0..p).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let all: Vec<usize> = (0..p).collect();
    let draws = multiplier_bootstrap(&u, &precision(identity), 1.0, &all, 2000, false, RngStream::new(3, 0)).unwrap();
    let got = quantile(&draws, 0.95).unwrap();

    let mut reference: Vec<f64> = (0..200_000)
        .map(|_| (0..p).map(|_| g.normal().abs()).fold(0.0, f64::max))
        .collect();
    reference.sort_by(f64::total_cmp);
    let want = reference[(0.95 * reference.len() as f64) as usize - 1];
    assert!((got / want - 1.0).abs() <= 0.05, "{got} vs {want}");
}

#[test]
fn bootstrap_is_homogeneous_in_sigma() {
    let inst = instance(33, 50, 7);
    let u = Matrix::from_rows(&inst.u).unwrap();
    let th = precision(inst.theta);
    let group = [0, 3, 6];
    let s = RngStream::new(8, 2);
    let base = multiplier_bootstrap(&u, &th, 1.3, &group, 100, true, s).unwrap();
    for c in [2.0, 0.5, 4.0] {
        let scaled = multiplier_bootstrap(&u, &th, 1.3 * c, &group, 100, true, s).unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert_eq!(a * c, *b);
        }
    }
    let scaled = multiplier_bootstrap(&u, &th, 1.3 * 3.0, &group, 100, true, s).unwrap();
    for (a, b) in base.iter().zip(&scaled) {
        assert!((a * 3.0 - b).abs() <= 1e-14 * b.abs());
    }
}

#[test]
fn quantile_of_folded_normal() {
    let mut g = Xorshift(12);
    let draws: Vec<f64> = (0..10_000).map(|_| g.normal().abs()).collect();
    let q = quantile(&draws, 0.95).unwrap();
    assert!((q - 1.96).abs() <= 0.05, "{q}");
    let top = draws.iter().copied().fold(0.0, f64::max);
    assert_eq!(quantile(&draws, 1.0 - 1e-12).unwrap(), top);
}

#[test]
fn bootstrap_is_deterministic() {
    let inst = instance(34, 50, 9);
    let u = Matrix::from_rows(&inst.u).unwrap();
    let th = precision(inst.theta);
    let all: Vec<usize> = (0..9).collect();
    let s = RngStream::new(77, 1);
    let a = multiplier_bootstrap(&u, &th, 1.0, &all, 300, true, s).unwrap();
    let b = multiplier_bootstrap(&u, &th, 1.0, &all, 300, true, s).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = pool.install(|| multiplier_bootstrap(&u, &th, 1.0, &all, 300, true, s).unwrap());
    assert_eq!(a, c);
    let d = multiplier_bootstrap(&u, &th, 1.0, &all, 300, true, RngStream::new(78, 1)).unwrap();
    assert_ne!(a, d);
}

struct Setup {
    y: Vec<f64>,
    fit: TransferFit,
    decomp: FactorDecomposition,
    theta: PrecisionEstimate,
}

fn setup(seed: u64, theta: Option<Dense>) -> Setup {
    let inst = instance(seed, 80, 10);
    let decomp = identity_decomp(&inst.u);
    let theta = precision(theta.unwrap_or(inst.theta));
    Setup {
        fit: fit_with(inst.beta_hat),
        y: inst.y,
        decomp,
        theta,
    }
}

impl Setup {
    fn inputs(&self) -> InferenceInputs<'_> {
        InferenceInputs {
            fit: &self.fit,
            target_decomp: &self.decomp,
            y_tilde: &self.y,
            theta: &self.theta,
            sigma_hat: 0.9,
        }
    }
}

#[test]
fn studentized_half_width_ratios_are_exact() {
    let s = setup(35, None);
    let group: Vec<usize> = (0..10).collect();
    let r = simultaneous_cis(&s.inputs(), &group, 0.05, true, 200, RngStream::new(1, 0)).unwrap();
    let half: Vec<f64> = r.intervals.iter().map(|iv| (iv.hi - iv.lo) / 2.0).collect();
    let root_n = (80f64).sqrt();
    for &i in &group {
        let want = s.theta.theta[(i, i)].sqrt() * r.interval_critical / root_n;
        assert!((half[i] - want).abs() <= 1e-14 * want);
    }
    for i in 0..10 {
        for j in 0..10 {
            let want = (s.theta.theta[(i, i)] / s.theta.theta[(j, j)]).sqrt();
            assert!((half[i] / half[j] - want).abs() <= 1e-12 * want);
        }
    }
}

#[test]
fn equal_diagonal_studentized_matches_plain_up_to_scale() {
    let mut theta: Dense = vec![vec![0.1; 10]; 10];
    for (i, row) in theta.iter_mut().enumerate() {
        row[i] = 2.25;
    }
    let s = setup(36, Some(theta));
    let group: Vec<usize> = (0..10).collect();
    let stream = RngStream::new(2, 0);
    let stu = simultaneous_cis(&s.inputs(), &group, 0.1, true, 300, stream).unwrap();
    let plain = simultaneous_cis(&s.inputs(), &group, 0.1, false, 300, stream).unwrap();
    assert!((stu.interval_critical * 1.5 - plain.interval_critical).abs() <= 1e-12);
    for (a, b) in stu.intervals.iter().zip(&plain.intervals) {
        assert!((a.lo - b.lo).abs() <= 1e-12 && (a.hi - b.hi).abs() <= 1e-12);
    }
}

#[test]
fn intervals_are_centered_and_test_is_consistent() {
    let s = setup(37, None);
    let group = vec![4, 1, 7];
    let r = simultaneous_cis(&s.inputs(), &group, 0.05, true, 200, RngStream::new(3, 0)).unwrap();
    for iv in &r.intervals {
        let c = r.beta_tilde[iv.index];
        assert!(iv.lo <= c && c <= iv.hi);
        assert!(((iv.hi - c) - (c - iv.lo)).abs() <= 1e-14 * c.abs().max(1.0));
    }
    assert_eq!(r.intervals.iter().map(|iv| iv.index).collect::<Vec<_>>(), group);
    assert_eq!(r.test.reject, r.test.statistic > r.test.critical);
    let stat = (80f64).sqrt() * r.beta_tilde.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert_eq!(r.test.statistic, stat);

    let zero = adequacy_test(&s.inputs(), &[0.0; 10], 0.05, 200, RngStream::new(3, 0)).unwrap();
    assert_eq!(zero.statistic, 0.0);
    assert!(!zero.reject);
    assert_eq!(zero.critical, r.test.critical);

    let wide = simultaneous_cis(&s.inputs(), &group, 0.999, true, 200, RngStream::new(3, 0)).unwrap();
    assert!(wide.interval_critical < 0.5 * r.interval_critical);
}

#[test]
fn reject_is_monotone_in_sup_norm() {
    let s = setup(38, None);
    let stream = RngStream::new(4, 0);
    let mut last = false;
    for k in 0..40 {
        let scale = k as f64 * 0.05;
        let beta: Vec<f64> = (0..10).map(|j| scale * (j as f64 - 4.5) / 4.5).collect();
        let t = adequacy_test(&s.inputs(), &beta, 0.05, 200, stream).unwrap();
        assert!(!last || t.reject, "reject flipped back at scale {scale}");
        last = t.reject;
    }
    assert!(last);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_is_monotone(
        draws in prop::collection::vec(0.0f64..10.0, 1..200),
        a in 0.001f64..0.999,
        b in 0.001f64..0.999,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantile(&draws, lo).unwrap() <= quantile(&draws, hi).unwrap());
        let q = quantile(&draws, hi).unwrap();
        prop_assert!(draws.contains(&q));
        let below = draws.iter().filter(|&&d| d <= q).count() as f64;
        prop_assert!(below >= hi * draws.len() as f64 - 1e-6);
    }
}
