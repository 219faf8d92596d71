//! Synthetic factor-augmented transfer problems and a replication runner
//! comparing the eight estimator variants.
//!
//! Dataset `k` (0 is the target) is generated as
//!
//! ```text
//! X_k = F_k B_kᵀ + U_k,   Y_k = U_k w_k + F_k γ_k + E_k
//! ```
//!
//! with `F ~ N(0, 1)`, `B ~ Unif(-b, b)`, rows of `U_k ~ N(0, Σ_k)`,
//! `Σ_0 = Toeplitz(ρ)` and `Σ_k = Σ_0 + ε εᵀ`, `ε ~ N(0, τ² I)`. The target
//! coefficients are `w_0 = (signal · 1_s, 0)`; informative sources move them
//! by `(η/p) R₁` and `γ` by `0.1 R₂`, the rest by `(2η/p) R₁` and `0.5 R₂`,
//! with `R` Rademacher vectors.
//!
//! Each dataset draws from its own sub-stream in a fixed order whatever its
//! informative status, so runs that differ only in the informative count see
//! the same underlying noise.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factor::{FactorDecomposition, RankSpec};
use crate::numerics::{
    mvn_with_factor, norm1, norm2, rademacher_vec, standard_normal_matrix_with,
    standard_normal_vec, sym_eig, Matrix, RngStream,
};
use crate::solver::DEFAULT_LAMBDA_C;
use crate::transfer::{
    detect_prepared, estimate_sigma, fit_prepared, preprocess, Dataset, Mode, PreparedDataset,
    Role, Threshold, TransferConfig,
};

/// Stream tag of the informative-set permutation.
pub const PERMUTATION_TAG: u64 = 0xA5E7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    OnlyFarm,
    TransFarm,
    OracleTransFarm,
    PooledTransFarm,
    OnlyLasso,
    TransLasso,
    OracleTransLasso,
    PooledTransLasso,
}

impl Estimator {
    pub const ALL: [Estimator; 8] = [
        Estimator::OnlyFarm,
        Estimator::TransFarm,
        Estimator::OracleTransFarm,
        Estimator::PooledTransFarm,
        Estimator::OnlyLasso,
        Estimator::TransLasso,
        Estimator::OracleTransLasso,
        Estimator::PooledTransLasso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::OnlyFarm => "only-FARM",
            Estimator::TransFarm => "Trans-FARM",
            Estimator::OracleTransFarm => "Oracle-Trans-FARM",
            Estimator::PooledTransFarm => "Pooled-Trans-FARM",
            Estimator::OnlyLasso => "only-Lasso",
            Estimator::TransLasso => "Trans-Lasso",
            Estimator::OracleTransLasso => "Oracle-Trans-Lasso",
            Estimator::PooledTransLasso => "Pooled-Trans-Lasso",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            Estimator::OnlyFarm
            | Estimator::TransFarm
            | Estimator::OracleTransFarm
            | Estimator::PooledTransFarm => Mode::Farm,
            _ => Mode::PlainLasso,
        }
    }

    /// The same source-set rule in the other mode.
    pub fn counterpart(self) -> Estimator {
        match self {
            Estimator::OnlyFarm => Estimator::OnlyLasso,
            Estimator::TransFarm => Estimator::TransLasso,
            Estimator::OracleTransFarm => Estimator::OracleTransLasso,
            Estimator::PooledTransFarm => Estimator::PooledTransLasso,
            Estimator::OnlyLasso => Estimator::OnlyFarm,
            Estimator::TransLasso => Estimator::TransFarm,
            Estimator::OracleTransLasso => Estimator::OracleTransFarm,
            Estimator::PooledTransLasso => Estimator::PooledTransFarm,
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .iter()
            .copied()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown estimator '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n0: usize,
    pub nk: usize,
    pub p: usize,
    pub s: usize,
    /// Number of sources `K`.
    pub sources: usize,
    /// Informative-set sizes swept by `run_experiment`.
    pub informative_sizes: Vec<usize>,
    pub eta: f64,
    pub r: usize,
    /// Nonzero value of the target coefficients.
    pub signal: f64,
    pub gamma0: Vec<f64>,
    /// Coefficient contrast of informative sources, in units of `η/p`.
    pub informative_contrast: f64,
    /// Coefficient contrast of the other sources, in units of `η/p`.
    pub adversarial_contrast: f64,
    pub informative_gamma_shift: f64,
    pub adversarial_gamma_shift: f64,
    /// Loadings are `Unif(-loading_bound, loading_bound)`.
    pub loading_bound: f64,
    pub toeplitz_rho: f64,
    /// Standard deviation of the rank-one covariance perturbation of sources.
    pub source_cov_scale: f64,
    pub replications: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub lambda_c: f64,
    pub folds: usize,
    pub threshold: Threshold,
    /// Use the true rank instead of eigenvalue-ratio selection.
    pub fixed_rank: bool,
    /// Draw a new informative set in every replication.
    pub redraw_informative: bool,
    /// Record wall-clock seconds per estimator; zero when off.
    pub timing: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n0: 300,
            nk: 300,
            p: 500,
            s: 20,
            sources: 10,
            informative_sizes: (0..=10).collect(),
            eta: 5.0,
            r: 2,
            signal: 0.5,
            gamma0: vec![0.5, 0.5],
            informative_contrast: 1.0,
            adversarial_contrast: 2.0,
            informative_gamma_shift: 0.1,
            adversarial_gamma_shift: 0.5,
            loading_bound: 1.0,
            toeplitz_rho: 0.5,
            source_cov_scale: 0.3,
            replications: 50,
            seed: 1,
            estimators: Estimator::ALL.to_vec(),
            lambda_c: DEFAULT_LAMBDA_C,
            folds: 3,
            threshold: Threshold::TwiceTargetLoss,
            fixed_rank: false,
            redraw_informative: true,
            timing: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n0 < 2 || self.nk < 2 || self.p < 2 {
            return bad(format!(
                "need n0, nk, p >= 2, got {}, {}, {}",
                self.n0, self.nk, self.p
            ));
        }
        if self.s > self.p {
            return bad(format!("sparsity {} exceeds p = {}", self.s, self.p));
        }
        if self.r > self.n0.min(self.nk).min(self.p) {
            return bad(format!("rank {} exceeds min(n, p)", self.r));
        }
        if self.gamma0.len() != self.r {
            return bad(format!(
                "gamma0 has {} entries for rank {}",
                self.gamma0.len(),
                self.r
            ));
        }
        if let Some(&m) = self.informative_sizes.iter().find(|&&m| m > self.sources) {
            return bad(format!(
                "informative size {m} exceeds {} sources",
                self.sources
            ));
        }
        if self.replications < 1 {
            return bad("need at least one replication".into());
        }
        if !(self.loading_bound > 0.0) || !(self.source_cov_scale >= 0.0) {
            return bad("loading bound must be positive and covariance scale >= 0".into());
        }
        if !(self.toeplitz_rho.abs() < 1.0) {
            return bad(format!("toeplitz rho {} outside (-1, 1)", self.toeplitz_rho));
        }
        Ok(())
    }

    fn transfer_config(&self, mode: Mode, replication: usize) -> TransferConfig {
        TransferConfig {
            mode,
            rank: if self.fixed_rank {
                RankSpec::Fixed(self.r)
            } else {
                RankSpec::default()
            },
            lambda_c: self.lambda_c,
            folds: self.folds,
            threshold: self.threshold,
            seed: self.seed ^ (replication as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..TransferConfig::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimTruth {
    /// Target coefficients `w_0`.
    pub beta: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub source_w: Vec<Vec<f64>>,
    pub source_gamma: Vec<Vec<f64>>,
    /// Sorted indices of informative sources.
    pub informative: Vec<usize>,
    /// Per dataset, target first.
    pub factors: Vec<Matrix>,
    pub loadings: Vec<Matrix>,
    pub idiosyncratic: Vec<Matrix>,
}

impl SimTruth {
    /// `(F, B, U)` of dataset `k`, where 0 is the target and `k >= 1` is
    /// source `k - 1`.
    pub fn dataset_parts(&self, k: usize) -> (&Matrix, &Matrix, &Matrix) {
        (&self.factors[k], &self.loadings[k], &self.idiosyncratic[k])
    }
}

#[derive(Debug, Clone)]
pub struct SimData {
    pub target: Dataset,
    pub sources: Vec<Dataset>,
    pub truth: SimTruth,
}

/// Informative set: the first `informative_count` entries of a uniform
/// permutation of the sources, so sets for growing counts are nested.
pub fn informative_set(sources: usize, informative_count: usize, stream: RngStream) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sources).collect();
    order.shuffle(&mut stream.child(PERMUTATION_TAG).rng());
    let mut set = order[..informative_count.min(sources)].to_vec();
    set.sort_unstable();
    set
}

/// One instance with a uniformly drawn informative set of the given size.
pub fn generate(config: &SimConfig, informative_count: usize, stream: RngStream) -> Result<SimData> {
    if informative_count > config.sources {
        return Err(Error::InvalidArgument(format!(
            "informative count {informative_count} exceeds {} sources",
            config.sources
        )));
    }
    let informative = informative_set(config.sources, informative_count, stream);
    generate_with_set(config, &informative, stream)
}

/// One instance with the informative sources given explicitly.
pub fn generate_with_set(
    config: &SimConfig,
    informative: &[usize],
    stream: RngStream,
) -> Result<SimData> {
    config.validate()?;
    let mut informative = informative.to_vec();
    informative.sort_unstable();
    informative.dedup();
    if let Some(&k) = informative.iter().find(|&&k| k >= config.sources) {
        return Err(Error::InvalidArgument(format!(
            "informative index {k} out of range for {} sources",
            config.sources
        )));
    }
    let p = config.p;
    let sigma0 = Matrix::toeplitz_power(p, config.toeplitz_rho);
    let chol0 = sigma0.cholesky()?;
    let beta: Vec<f64> = (0..p)
        .map(|j| if j < config.s { config.signal } else { 0.0 })
        .collect();
    let loading_law = Uniform::new(-config.loading_bound, config.loading_bound);
    let eps_law = Normal::new(0.0, config.source_cov_scale.max(0.0))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut truth = SimTruth {
        beta: beta.clone(),
        gamma0: config.gamma0.clone(),
        source_w: Vec::with_capacity(config.sources),
        source_gamma: Vec::with_capacity(config.sources),
        informative: informative.clone(),
        factors: Vec::new(),
        loadings: Vec::new(),
        idiosyncratic: Vec::new(),
    };
    let mut target = None;
    let mut sources = Vec::with_capacity(config.sources);
    for k in 0..=config.sources {
        let mut rng = stream.child(k as u64 + 1).rng();
        let n = if k == 0 { config.n0 } else { config.nk };
        let f = standard_normal_matrix_with(&mut rng, n, config.r.max(1))?
            .select_cols(&(0..config.r).collect::<Vec<_>>());
        let b = Matrix::from_fn(p, config.r, |_, _| loading_law.sample(&mut rng));
        let u = if k == 0 {
            mvn_with_factor(&mut rng, n, &chol0)?
        } else {
            let eps: Vec<f64> = (0..p).map(|_| eps_law.sample(&mut rng)).collect();
            let cov = Matrix::from_fn(p, p, |i, j| sigma0[(i, j)] + eps[i] * eps[j]);
            mvn_with_factor(&mut rng, n, &cov.cholesky()?)?
        };
        let (w, gamma) = if k == 0 {
            (beta.clone(), config.gamma0.clone())
        } else {
            let r1 = rademacher_vec(&mut rng, p);
            let r2 = rademacher_vec(&mut rng, config.r);
            let is_informative = informative.binary_search(&(k - 1)).is_ok();
            let (contrast, shift) = if is_informative {
                (config.informative_contrast, config.informative_gamma_shift)
            } else {
                (config.adversarial_contrast, config.adversarial_gamma_shift)
            };
            let scale = contrast * config.eta / p as f64;
            let w: Vec<f64> = beta.iter().zip(&r1).map(|(b, r)| b + scale * r).collect();
            let g: Vec<f64> = config.gamma0.iter().zip(&r2).map(|(g, r)| g + shift * r).collect();
            (w, g)
        };
        let noise = standard_normal_vec(&mut rng, n);
        let fb = f.matmul(&b.transpose())?;
        let x = fb.add(&u)?;
        let uw = u.matvec(&w)?;
        let fg = f.matvec(&gamma)?;
        let y: Vec<f64> = (0..n).map(|i| uw[i] + fg[i] + noise[i]).collect();
        let role = if k == 0 { Role::Target } else { Role::Source(k - 1) };
        let dataset = Dataset::new(x, y, role)?;
        if k == 0 {
            target = Some(dataset);
        } else {
            truth.source_w.push(w);
            truth.source_gamma.push(gamma);
            sources.push(dataset);
        }
        truth.factors.push(f);
        truth.loadings.push(b);
        truth.idiosyncratic.push(u);
    }
    Ok(SimData {
        target: target.expect("target generated first"),
        sources,
        truth,
    })
}

pub fn l1_error(estimate: &[f64], truth: &[f64]) -> f64 {
    let d: Vec<f64> = estimate.iter().zip(truth).map(|(a, b)| a - b).collect();
    norm1(&d)
}

pub fn l2_error(estimate: &[f64], truth: &[f64]) -> f64 {
    let d: Vec<f64> = estimate.iter().zip(truth).map(|(a, b)| a - b).collect();
    norm2(&d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    pub estimator: Estimator,
    pub informative_size: usize,
    pub replication: usize,
    pub l1_error: f64,
    pub l2_error: f64,
    pub seconds: f64,
    /// Selected sources of the detection-based estimators.
    pub detected: Option<Vec<usize>>,
    pub informative: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimFailure {
    pub informative_size: usize,
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: Estimator,
    pub informative_size: usize,
    pub count: usize,
    pub mean_l1: f64,
    pub se_l1: f64,
    pub mean_l2: f64,
    pub se_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Sorted by informative size, replication, then roster order.
    pub rows: Vec<SimRow>,
    pub failures: Vec<SimFailure>,
    pub summary: Vec<SummaryRow>,
}

impl SimResult {
    pub fn summary_for(&self, estimator: Estimator, informative_size: usize) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.estimator == estimator && s.informative_size == informative_size)
    }
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error per (estimator, informative size), ordered by
/// size and then by first appearance of the estimator.
pub fn summarize(rows: &[SimRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, Estimator)> = Vec::new();
    for r in rows {
        let key = (r.informative_size, r.estimator);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.sort_by_key(|(m, _)| *m);
    keys.into_iter()
        .map(|(m, e)| {
            let sel: Vec<&SimRow> = rows
                .iter()
                .filter(|r| r.informative_size == m && r.estimator == e)
                .collect();
            let l1: Vec<f64> = sel.iter().map(|r| r.l1_error).collect();
            let l2: Vec<f64> = sel.iter().map(|r| r.l2_error).collect();
            let (mean_l1, se_l1) = mean_se(&l1);
            let (mean_l2, se_l2) = mean_se(&l2);
            SummaryRow {
                estimator: e,
                informative_size: m,
                count: sel.len(),
                mean_l1,
                se_l1,
                mean_l2,
                se_l2,
            }
        })
        .collect()
}

struct Prepared {
    target: PreparedDataset,
    sources: Vec<PreparedDataset>,
    sigma: f64,
}

fn prepare(data: &SimData, config: &TransferConfig) -> Result<Prepared> {
    let target = preprocess(&data.target, config)?;
    let sources = data
        .sources
        .iter()
        .map(|s| preprocess(s, config))
        .collect::<Result<Vec<_>>>()?;
    let sigma = estimate_sigma(&target, &config.lasso)?;
    Ok(Prepared {
        target,
        sources,
        sigma,
    })
}

/// Runs every roster estimator on one generated instance.
pub fn run_replication(
    config: &SimConfig,
    informative_size: usize,
    replication: usize,
) -> Result<Vec<SimRow>> {
    let stream = RngStream::new(config.seed, replication as u64);
    let perm_stream = if config.redraw_informative {
        stream
    } else {
        RngStream::new(config.seed, 0)
    };
    let informative = informative_set(config.sources, informative_size, perm_stream);
    let data = generate_with_set(config, &informative, stream)?;
    let truth = &data.truth;
    let mut rows = Vec::with_capacity(config.estimators.len());
    for mode in [Mode::Farm, Mode::PlainLasso] {
        if !config.estimators.iter().any(|e| e.mode() == mode) {
            continue;
        }
        let tcfg = config.transfer_config(mode, replication);
        let prep = prepare(&data, &tcfg)?;
        for &est in config.estimators.iter().filter(|e| e.mode() == mode) {
            let start = Instant::now();
            let all: Vec<usize> = (0..config.sources).collect();
            let (set, detected) = match est {
                Estimator::OnlyFarm | Estimator::OnlyLasso => (Vec::new(), None),
                Estimator::OracleTransFarm | Estimator::OracleTransLasso => {
                    (truth.informative.clone(), None)
                }
                Estimator::PooledTransFarm | Estimator::PooledTransLasso => (all, None),
                Estimator::TransFarm | Estimator::TransLasso => {
                    let report = detect_prepared(&prep.target, &prep.sources, prep.sigma, &tcfg)?;
                    (report.selected.clone(), Some(report.selected))
                }
            };
            let selected: Vec<(usize, &PreparedDataset)> =
                set.iter().map(|&k| (k, &prep.sources[k])).collect();
            let fit = fit_prepared(&prep.target, &selected, Some(prep.sigma), &tcfg)?;
            let seconds = if config.timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            rows.push(SimRow {
                estimator: est,
                informative_size,
                replication,
                l1_error: l1_error(&fit.beta_hat, &truth.beta),
                l2_error: l2_error(&fit.beta_hat, &truth.beta),
                seconds,
                detected,
                informative: truth.informative.clone(),
            });
        }
    }
    // report in roster order
    rows.sort_by_key(|r| config.estimators.iter().position(|e| *e == r.estimator));
    Ok(rows)
}

/// Sweeps the informative sizes with `replications` replications each.
/// Replications run in parallel; failed ones are recorded and excluded, and
/// the run errors only when more than 20% fail.
pub fn run_experiment(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    if config.estimators.is_empty() {
        return Err(Error::InvalidArgument("empty estimator roster".into()));
    }
    let tasks: Vec<(usize, usize)> = config
        .informative_sizes
        .iter()
        .flat_map(|&m| (0..config.replications).map(move |rep| (m, rep)))
        .collect();
    let outcomes: Vec<std::result::Result<Vec<SimRow>, SimFailure>> = tasks
        .par_iter()
        .map(|&(m, rep)| {
            run_replication(config, m, rep).map_err(|e| SimFailure {
                informative_size: m,
                replication: rep,
                message: e.to_string(),
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => rows.extend(r),
            Err(f) => failures.push(f),
        }
    }
    if failures.len() * 5 > tasks.len() {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total: tasks.len(),
            first: failures[0].message.clone(),
        });
    }
    let summary = summarize(&rows);
    Ok(SimResult {
        rows,
        failures,
        summary,
    })
}

/// Factor-recovery check against the true factors.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationDiagnostic {
    pub true_rank: usize,
    pub estimated_rank: usize,
    /// Spectral norm of `HᵀH - I`; `None` on a rank miss.
    pub orthogonality_error: Option<f64>,
    /// `||F̂ - F Hᵀ||_max`; `None` on a rank miss.
    pub factor_error: Option<f64>,
}

impl RotationDiagnostic {
    pub fn rank_miss(&self) -> bool {
        self.true_rank != self.estimated_rank
    }
}

/// Rotation `H = n⁻¹ V⁻¹ F̂ᵀ F BᵀB` with `V` the top eigenvalues of
/// `X Xᵀ / n`, for dataset `k` (0 is the target).
pub fn rotation_diagnostic(
    truth: &SimTruth,
    decomp: &FactorDecomposition,
    k: usize,
) -> Result<RotationDiagnostic> {
    if k >= truth.factors.len() {
        return Err(Error::InvalidArgument(format!("no dataset {k}")));
    }
    let (f, b, _) = truth.dataset_parts(k);
    let true_rank = f.cols();
    let estimated_rank = decomp.rank;
    if f.rows() != decomp.n() {
        return Err(Error::Dimension("decomposition does not match dataset".into()));
    }
    if true_rank != estimated_rank || true_rank == 0 {
        return Ok(RotationDiagnostic {
            true_rank,
            estimated_rank,
            orthogonality_error: None,
            factor_error: None,
        });
    }
    let n = f.rows() as f64;
    let r = true_rank;
    let fhat = &decomp.factors;
    let cross = fhat.transpose().matmul(f)?; // r x r
    let btb = b.transpose().matmul(b)?;
    let mut h = cross.matmul(&btb)?.scaled(1.0 / n);
    for i in 0..r {
        let v = decomp.gram_eigenvalues[i] / n;
        for x in h.row_mut(i) {
            *x /= v;
        }
    }
    let hth = h.transpose().matmul(&h)?.sub(&Matrix::identity(r))?;
    let sym = Matrix::from_fn(r, r, |i, j| 0.5 * (hth[(i, j)] + hth[(j, i)]));
    let eig = sym_eig(&sym, None)?;
    let orthogonality_error = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let factor_error = fhat.sub(&f.matmul(&h.transpose())?)?.max_abs();
    Ok(RotationDiagnostic {
        true_rank,
        estimated_rank,
        orthogonality_error: Some(orthogonality_error),
        factor_error: Some(factor_error),
    })
}
