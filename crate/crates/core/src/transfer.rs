//! Two-step transfer estimation over a source set and cross-validated
//! detection of transferable sources.
//!
//! Every dataset is first reduced to its idiosyncratic design `Û` and the
//! factor-residualized response `Ỹ`. The transferring step pools the target
//! with the chosen sources,
//!
//! ```text
//! ŵ = argmin (1/2N) Σ_k ||Ỹ_k - Û_k w||² + λ_w ||w||₁
//! ```
//!
//! and the correction step fits the target alone with `ŵ` as offset,
//!
//! ```text
//! δ̂ = argmin (1/2n₀) ||Ỹ₀ - Û₀ (ŵ + δ)||² + λ_δ ||δ||₁,    β̂ = ŵ + δ̂.
//! ```
//!
//! Source indices are positions in the `sources` slice, starting at 0.

use rayon::prelude::*;

use crate::error::{Error, Result, ResultExt};
use crate::factor::{decompose, FactorDecomposition, RankSpec};
use crate::numerics::{dot, shuffled_folds, Matrix, RngStream};
use crate::solver::{
    default_lambda0, lasso_fit, penalty_level, scaled_lasso, LassoOptions, LassoProblem,
    DEFAULT_LAMBDA_C,
};

/// Stream tag used for the fold shuffle of source detection.
pub const DETECTION_TAG: u64 = 0x00D3_7EC7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Target,
    Source(usize),
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub role: Role,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>, role: Role) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Dimension(format!(
                "{} design rows but response of length {}",
                x.rows(),
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response"));
        }
        Ok(Dataset { x, y, role })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Factor-adjusted fit on `(Û, Ỹ)`.
    #[default]
    Farm,
    /// Rank forced to zero, so the fit runs on the raw `(X, Y)`.
    PlainLasso,
}

/// Margin added to the target-only loss when admitting a source.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Threshold {
    /// `2 L̂⁽⁰⁾`
    #[default]
    TwiceTargetLoss,
    /// `ε₀ σ̂²`
    Eps0(f64),
}

#[derive(Debug, Clone)]
pub struct TransferConfig {
    pub mode: Mode,
    pub rank: RankSpec,
    pub intercept: bool,
    /// Constant `c` of `λ = c σ̂ sqrt(2 log p / N)`.
    pub lambda_c: f64,
    /// Fixed transferring-step penalty; auto rule when `None`.
    pub lambda_w: Option<f64>,
    /// Fixed correction-step penalty; auto rule when `None`.
    pub lambda_delta: Option<f64>,
    pub folds: usize,
    pub threshold: Threshold,
    /// Seed of the fold shuffle in source detection.
    pub seed: u64,
    pub lasso: LassoOptions,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            mode: Mode::Farm,
            rank: RankSpec::default(),
            intercept: false,
            lambda_c: DEFAULT_LAMBDA_C,
            lambda_w: None,
            lambda_delta: None,
            folds: 3,
            threshold: Threshold::default(),
            seed: 0,
            lasso: LassoOptions::default(),
        }
    }
}

impl TransferConfig {
    pub fn plain_lasso() -> Self {
        TransferConfig {
            mode: Mode::PlainLasso,
            ..TransferConfig::default()
        }
    }

    fn rank_spec(&self) -> RankSpec {
        match self.mode {
            Mode::Farm => self.rank,
            Mode::PlainLasso => RankSpec::Fixed(0),
        }
    }

    fn detection_stream(&self) -> RngStream {
        RngStream::new(self.seed, 0).child(DETECTION_TAG)
    }
}

/// A dataset after factor adjustment: `Û` lives in the decomposition and
/// `y_tilde` is `(I - F̂F̂ᵀ/n) Y`.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub decomposition: FactorDecomposition,
    pub y_tilde: Vec<f64>,
    pub role: Role,
}

impl PreparedDataset {
    pub fn u(&self) -> &Matrix {
        &self.decomposition.idiosyncratic
    }

    pub fn n(&self) -> usize {
        self.decomposition.n()
    }

    pub fn p(&self) -> usize {
        self.decomposition.p()
    }
}

pub fn preprocess(dataset: &Dataset, config: &TransferConfig) -> Result<PreparedDataset> {
    let decomposition = decompose(&dataset.x, config.rank_spec(), config.intercept)?;
    let y_tilde = decomposition.residualize(&dataset.y)?;
    Ok(PreparedDataset {
        decomposition,
        y_tilde,
        role: dataset.role,
    })
}

/// Noise level from the scaled lasso of `Ỹ₀` on `Û₀` with the default
/// `lambda0`.
pub fn estimate_sigma(target: &PreparedDataset, options: &LassoOptions) -> Result<f64> {
    let lambda0 = default_lambda0(target.n(), target.p());
    let fit = scaled_lasso(target.u(), &target.y_tilde, lambda0, options)
        .context(|| "noise level of the target".into())?;
    Ok(fit.sigma)
}

#[derive(Debug, Clone)]
pub struct TransferFit {
    pub w_hat: Vec<f64>,
    pub delta_hat: Vec<f64>,
    pub beta_hat: Vec<f64>,
    /// Sorted source indices pooled in the transferring step.
    pub source_set: Vec<usize>,
    pub lambda_w: f64,
    pub lambda_delta: f64,
    /// Noise level behind the automatic penalties, when one was needed.
    pub sigma_hat: Option<f64>,
    pub target_rank: usize,
    /// Ranks of the pooled sources, aligned with `source_set`.
    pub source_ranks: Vec<usize>,
    pub mode: Mode,
}

fn check_shapes(target: &Dataset, sources: &[Dataset]) -> Result<()> {
    let p = target.p();
    for (k, s) in sources.iter().enumerate() {
        if s.p() != p {
            return Err(Error::Dimension(format!(
                "source {k} has {} columns, target has {p}",
                s.p()
            )));
        }
    }
    Ok(())
}

fn normalized_set(set_a: &[usize], k: usize) -> Result<Vec<usize>> {
    let mut set = set_a.to_vec();
    set.sort_unstable();
    set.dedup();
    if let Some(&bad) = set.iter().find(|&&i| i >= k) {
        return Err(Error::InvalidArgument(format!(
            "source index {bad} out of range for {k} sources"
        )));
    }
    Ok(set)
}

/// Two-step fit pooling the target with the sources in `set_a`.
pub fn oracle_trans_farm(
    target: &Dataset,
    sources: &[Dataset],
    set_a: &[usize],
    config: &TransferConfig,
) -> Result<TransferFit> {
    check_shapes(target, sources)?;
    let set = normalized_set(set_a, sources.len())?;
    let target_prep = preprocess(target, config).context(|| "target preprocessing".into())?;
    let source_preps: Vec<PreparedDataset> = set
        .par_iter()
        .map(|&k| preprocess(&sources[k], config).context(|| format!("source {k} preprocessing")))
        .collect::<Result<_>>()?;
    let selected: Vec<(usize, &PreparedDataset)> = set.iter().copied().zip(&source_preps).collect();
    let sigma = if config.lambda_w.is_some() && config.lambda_delta.is_some() {
        None
    } else {
        Some(estimate_sigma(&target_prep, &config.lasso)?)
    };
    fit_prepared(&target_prep, &selected, sigma, config)
}

/// Two-step fit on already prepared data. `selected` pairs each source index
/// with its prepared dataset; `sigma_hat` is required when either penalty is
/// automatic.
pub fn fit_prepared(
    target: &PreparedDataset,
    selected: &[(usize, &PreparedDataset)],
    sigma_hat: Option<f64>,
    config: &TransferConfig,
) -> Result<TransferFit> {
    let p = target.p();
    let mut selected = selected.to_vec();
    selected.sort_by_key(|(k, _)| *k);
    if selected.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument("duplicate source in set".into()));
    }
    for (k, s) in &selected {
        if s.p() != p {
            return Err(Error::Dimension(format!(
                "source {k} has {} columns, target has {p}",
                s.p()
            )));
        }
    }
    let auto = |n: usize| -> Result<f64> {
        let sigma = sigma_hat.ok_or_else(|| {
            Error::InvalidArgument("automatic penalty needs a noise level".into())
        })?;
        Ok(penalty_level(config.lambda_c, sigma, p, n))
    };
    let n0 = target.n();
    let n_pooled = n0 + selected.iter().map(|(_, s)| s.n()).sum::<usize>();
    let lambda_w = match config.lambda_w {
        Some(l) => l,
        None => auto(n_pooled)?,
    };
    let lambda_delta = match config.lambda_delta {
        Some(l) => l,
        None => auto(n0)?,
    };

    let mut blocks: Vec<(&Matrix, &[f64])> = vec![(target.u(), &target.y_tilde)];
    blocks.extend(selected.iter().map(|(_, s)| (s.u(), &s.y_tilde[..])));
    let pooled = LassoProblem::new(blocks, lambda_w)?;
    let w_hat = lasso_fit(&pooled, &config.lasso, None)
        .context(|| "transferring step".into())?
        .coefficients;

    let correction = LassoProblem::single(target.u(), &target.y_tilde, lambda_delta)?
        .with_offset(&w_hat)?;
    let delta_hat = lasso_fit(&correction, &config.lasso, None)
        .context(|| "correction step".into())?
        .coefficients;
    let beta_hat: Vec<f64> = w_hat.iter().zip(&delta_hat).map(|(w, d)| w + d).collect();

    Ok(TransferFit {
        w_hat,
        delta_hat,
        beta_hat,
        source_set: selected.iter().map(|(k, _)| *k).collect(),
        lambda_w,
        lambda_delta,
        sigma_hat,
        target_rank: target.decomposition.rank,
        source_ranks: selected.iter().map(|(_, s)| s.decomposition.rank).collect(),
        mode: config.mode,
    })
}

/// Mean squared residual `(1/|fold|) Σ_{i∈fold} (ỹ_i - Û_i w)²` over the
/// held-out rows.
pub fn fold_loss(
    w: &[f64],
    target_decomp: &FactorDecomposition,
    y_tilde: &[f64],
    fold: &[usize],
) -> Result<f64> {
    let u = &target_decomp.idiosyncratic;
    if fold.is_empty() {
        return Err(Error::InvalidArgument("empty fold".into()));
    }
    if w.len() != u.cols() || y_tilde.len() != u.rows() {
        return Err(Error::Dimension(format!(
            "coefficients {} / response {} against {}x{} design",
            w.len(),
            y_tilde.len(),
            u.rows(),
            u.cols()
        )));
    }
    if let Some(&bad) = fold.iter().find(|&&i| i >= u.rows()) {
        return Err(Error::InvalidArgument(format!(
            "fold row {bad} out of range for {} rows",
            u.rows()
        )));
    }
    let total: f64 = fold
        .iter()
        .map(|&i| {
            let e = y_tilde[i] - dot(u.row(i), w);
            e * e
        })
        .sum();
    Ok(total / fold.len() as f64)
}

#[derive(Debug, Clone)]
pub struct DetectionReport {
    /// Cross-validated loss of each source's transferring step.
    pub source_losses: Vec<f64>,
    /// Cross-validated loss of the target-only lasso.
    pub target_loss: f64,
    /// Realized margin: `2 L̂⁽⁰⁾` or `ε₀ σ̂²`.
    pub threshold: f64,
    /// Sorted selected source indices.
    pub selected: Vec<usize>,
    pub folds: usize,
    /// Stream of the fold shuffle.
    pub fold_stream: RngStream,
    pub sigma_hat: f64,
}

impl DetectionReport {
    /// `{k : L̂⁽ᵏ⁾ <= L̂⁽⁰⁾ + threshold}` from the stored losses.
    pub fn recompute_selection(&self) -> Vec<usize> {
        let bound = self.target_loss + self.threshold;
        self.source_losses
            .iter()
            .enumerate()
            .filter(|(_, &l)| l <= bound)
            .map(|(k, _)| k)
            .collect()
    }
}

pub fn detect_sources(
    target: &Dataset,
    sources: &[Dataset],
    config: &TransferConfig,
) -> Result<DetectionReport> {
    let prep = prepare_problem(target, sources, config)?;
    detect_prepared(&prep.target, &prep.sources, prep.sigma_hat, config)
}

/// Target and sources after factor adjustment, with the target noise level.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    pub target: PreparedDataset,
    pub sources: Vec<PreparedDataset>,
    pub sigma_hat: f64,
}

/// Decomposes every dataset once and estimates the target noise level.
pub fn prepare_problem(
    target: &Dataset,
    sources: &[Dataset],
    config: &TransferConfig,
) -> Result<PreparedProblem> {
    check_shapes(target, sources)?;
    let target_prep = preprocess(target, config).context(|| "target preprocessing".into())?;
    let source_preps: Vec<PreparedDataset> = sources
        .par_iter()
        .enumerate()
        .map(|(k, s)| preprocess(s, config).context(|| format!("source {k} preprocessing")))
        .collect::<Result<_>>()?;
    let sigma_hat = estimate_sigma(&target_prep, &config.lasso)?;
    Ok(PreparedProblem {
        target: target_prep,
        sources: source_preps,
        sigma_hat,
    })
}

/// Source detection on prepared data, reusing the decompositions across
/// folds.
pub fn detect_prepared(
    target: &PreparedDataset,
    sources: &[PreparedDataset],
    sigma_hat: f64,
    config: &TransferConfig,
) -> Result<DetectionReport> {
    let n0 = target.n();
    let p = target.p();
    if config.folds < 2 || n0 < 2 * config.folds {
        return Err(Error::InvalidArgument(format!(
            "detection with {} folds needs at least {} target rows, got {n0}",
            config.folds,
            2 * config.folds
        )));
    }
    if let Some((k, s)) = sources.iter().enumerate().find(|(_, s)| s.p() != p) {
        return Err(Error::Dimension(format!(
            "source {k} has {} columns, target has {p}",
            s.p()
        )));
    }
    let stream = config.detection_stream();
    let folds = shuffled_folds(stream, n0, config.folds)?;
    let c = config.lambda_c;
    let opts = &config.lasso;

    struct FoldData {
        u: Matrix,
        y: Vec<f64>,
    }
    let train: Vec<FoldData> = folds
        .iter()
        .map(|held| {
            let rows: Vec<usize> = (0..n0).filter(|i| held.binary_search(i).is_err()).collect();
            FoldData {
                u: target.u().select_rows(&rows),
                y: rows.iter().map(|&i| target.y_tilde[i]).collect(),
            }
        })
        .collect();

    let mut target_loss = 0.0;
    for (r, held) in folds.iter().enumerate() {
        let t = &train[r];
        let lambda = penalty_level(c, sigma_hat, p, t.u.rows());
        let beta = lasso_fit(&LassoProblem::single(&t.u, &t.y, lambda)?, opts, None)
            .context(|| format!("target-only fit on fold {r}"))?
            .coefficients;
        target_loss += fold_loss(&beta, &target.decomposition, &target.y_tilde, held)?;
    }
    target_loss /= folds.len() as f64;

    let source_losses: Vec<f64> = sources
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let mut total = 0.0;
            for (r, held) in folds.iter().enumerate() {
                let t = &train[r];
                let lambda = penalty_level(c, sigma_hat, p, t.u.rows() + s.n());
                let problem =
                    LassoProblem::new(vec![(&t.u, &t.y[..]), (s.u(), &s.y_tilde[..])], lambda)?;
                let w = lasso_fit(&problem, opts, None)
                    .context(|| format!("transferring step for source {k} on fold {r}"))?
                    .coefficients;
                total += fold_loss(&w, &target.decomposition, &target.y_tilde, held)?;
            }
            Ok(total / folds.len() as f64)
        })
        .collect::<Result<_>>()?;

    let threshold = match config.threshold {
        Threshold::TwiceTargetLoss => 2.0 * target_loss,
        Threshold::Eps0(eps) => eps * sigma_hat * sigma_hat,
    };
    let mut report = DetectionReport {
        source_losses,
        target_loss,
        threshold,
        selected: Vec::new(),
        folds: config.folds,
        fold_stream: stream,
        sigma_hat,
    };
    report.selected = report.recompute_selection();
    Ok(report)
}

/// Detection followed by the two-step fit on `{0} ∪ Â`.
pub fn trans_farm(
    target: &Dataset,
    sources: &[Dataset],
    config: &TransferConfig,
) -> Result<(TransferFit, DetectionReport)> {
    let prep = prepare_problem(target, sources, config)?;
    trans_farm_prepared(&prep, config)
}

pub fn trans_farm_prepared(
    prep: &PreparedProblem,
    config: &TransferConfig,
) -> Result<(TransferFit, DetectionReport)> {
    let report = detect_prepared(&prep.target, &prep.sources, prep.sigma_hat, config)?;
    let selected: Vec<(usize, &PreparedDataset)> =
        report.selected.iter().map(|&k| (k, &prep.sources[k])).collect();
    let fit = fit_prepared(&prep.target, &selected, Some(prep.sigma_hat), config)?;
    Ok((fit, report))
}
