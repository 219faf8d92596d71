//! Debiased estimation, the multiplier bootstrap, the test of `β = 0` and
//! simultaneous confidence intervals.
//!
//! With `Θ̂` the nodewise estimate of the inverse of `Û₀ᵀÛ₀ / n₀`,
//!
//! ```text
//! β̃ = β̂ + Θ̂ Û₀ᵀ (Ỹ₀ - Û₀ β̂) / n₀
//! Q  = σ̂ Θ̂ Σ_i e_i û_i / sqrt(n₀),   e_i ~ N(0, 1)
//! ```
//!
//! and the studentized draw divides coordinate `i` of `Q` by `sqrt(Θ̂_ii)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factor::FactorDecomposition;
use crate::numerics::{dot, standard_normal_vec, Matrix, RngStream};
use crate::solver::{nodewise_precision, NodewisePenalty, PrecisionEstimate};
use crate::transfer::{
    prepare_problem, trans_farm_prepared, Dataset, DetectionReport, TransferConfig, TransferFit,
};

/// Stream tag of the bootstrap multipliers.
pub const BOOTSTRAP_TAG: u64 = 0xB007;

pub const DEFAULT_DRAWS: usize = 500;

/// `β̂ + Θ̂ Û₀ᵀ (Ỹ - Û₀ β̂) / n₀`
pub fn debias(
    fit: &TransferFit,
    target_decomp: &FactorDecomposition,
    y_tilde: &[f64],
    theta: &PrecisionEstimate,
) -> Result<Vec<f64>> {
    let u = &target_decomp.idiosyncratic;
    let (n, p) = u.shape();
    if fit.beta_hat.len() != p || y_tilde.len() != n || theta.p() != p {
        return Err(Error::Dimension(format!(
            "coefficients {}, response {}, precision {} against {n}x{p} design",
            fit.beta_hat.len(),
            y_tilde.len(),
            theta.p()
        )));
    }
    let fitted = u.matvec(&fit.beta_hat)?;
    let resid: Vec<f64> = y_tilde.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let score: Vec<f64> = u.tmatvec(&resid)?.into_iter().map(|v| v / n as f64).collect();
    let correction = theta.theta.matvec(&score)?;
    Ok(fit
        .beta_hat
        .iter()
        .zip(&correction)
        .map(|(b, c)| b + c)
        .collect())
}

/// `b` draws of `max_{i∈group} |Q_i|` (or of the studentized version). Draw
/// `l` uses its own sub-stream of `stream`, so the result does not depend on
/// scheduling.
pub fn multiplier_bootstrap(
    u_hat: &Matrix,
    theta: &PrecisionEstimate,
    sigma_hat: f64,
    group: &[usize],
    b: usize,
    studentized: bool,
    stream: RngStream,
) -> Result<Vec<f64>> {
    let (n, p) = u_hat.shape();
    if b < 1 {
        return Err(Error::InvalidArgument("need at least one bootstrap draw".into()));
    }
    if group.is_empty() {
        return Err(Error::InvalidArgument("empty coordinate group".into()));
    }
    if !(sigma_hat > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise level must be positive, got {sigma_hat}"
        )));
    }
    if theta.p() != p {
        return Err(Error::Dimension(format!(
            "precision of size {} for {p} columns",
            theta.p()
        )));
    }
    if let Some(&bad) = group.iter().find(|&&i| i >= p) {
        return Err(Error::InvalidArgument(format!(
            "group index {bad} out of range for {p} coordinates"
        )));
    }
    let scales: Vec<f64> = if studentized {
        group
            .iter()
            .map(|&i| {
                let d = theta.theta[(i, i)];
                if d > 0.0 {
                    Ok(1.0 / d.sqrt())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "studentizing needs a positive precision diagonal, entry {i} is {d}"
                    )))
                }
            })
            .collect::<Result<_>>()?
    } else {
        vec![1.0; group.len()]
    };
    let factor = sigma_hat / (n as f64).sqrt();
    let draws = (0..b)
        .into_par_iter()
        .map(|l| {
            let mut rng = stream.child(l as u64).rng();
            let e = standard_normal_vec(&mut rng, n);
            let v = u_hat.tmatvec(&e).expect("multiplier length matches rows");
            group
                .iter()
                .zip(&scales)
                .map(|(&i, s)| (factor * dot(theta.theta.row(i), &v) * s).abs())
                .fold(0.0f64, f64::max)
        })
        .collect();
    Ok(draws)
}

/// Smallest draw `t` whose empirical CDF reaches `level`: the order
/// statistic at `ceil(B · level)`.
pub fn quantile(draws: &[f64], level: f64) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::InvalidArgument("no draws".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile level {level} outside (0, 1)"
        )));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len();
    // guard against B·level landing just above an integer
    let k = ((b as f64 * level) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[k.min(b) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdequacyTest {
    /// `sqrt(n₀) ||β̃||_∞`
    pub statistic: f64,
    /// Non-studentized bootstrap quantile at `1 - α` over all coordinates.
    pub critical: f64,
    pub reject: bool,
}

#[derive(Debug, Clone)]
pub struct InferenceResult {
    pub beta_tilde: Vec<f64>,
    pub theta: PrecisionEstimate,
    pub sigma_hat: f64,
    pub n0: usize,
    pub alpha: f64,
    pub draws: usize,
    pub group: Vec<usize>,
    pub studentized: bool,
    /// Bootstrap quantile behind the intervals.
    pub interval_critical: f64,
    pub intervals: Vec<Interval>,
    pub test: AdequacyTest,
}

/// Everything inference needs from a completed fit.
#[derive(Debug, Clone, Copy)]
pub struct InferenceInputs<'a> {
    pub fit: &'a TransferFit,
    pub target_decomp: &'a FactorDecomposition,
    pub y_tilde: &'a [f64],
    pub theta: &'a PrecisionEstimate,
    pub sigma_hat: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    Ok(())
}

/// Bootstrap test of `β = 0`: rejects when `sqrt(n₀) ||β̃||_∞` exceeds the
/// `1 - α` quantile of the non-studentized draws over all coordinates.
pub fn adequacy_test(
    inputs: &InferenceInputs<'_>,
    beta_tilde: &[f64],
    alpha: f64,
    b: usize,
    stream: RngStream,
) -> Result<AdequacyTest> {
    check_alpha(alpha)?;
    let u = &inputs.target_decomp.idiosyncratic;
    let all: Vec<usize> = (0..u.cols()).collect();
    let draws = multiplier_bootstrap(u, inputs.theta, inputs.sigma_hat, &all, b, false, stream)?;
    let critical = quantile(&draws, 1.0 - alpha)?;
    let statistic = (u.rows() as f64).sqrt()
        * beta_tilde.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(AdequacyTest {
        statistic,
        critical,
        reject: statistic > critical,
    })
}

/// Simultaneous intervals `β̃_i ± n₀^{-1/2} (sqrt(Θ̂_ii) if studentized) ĉ`
/// for `i` in `group`, together with the test of `β = 0`.
pub fn simultaneous_cis(
    inputs: &InferenceInputs<'_>,
    group: &[usize],
    alpha: f64,
    studentized: bool,
    b: usize,
    stream: RngStream,
) -> Result<InferenceResult> {
    check_alpha(alpha)?;
    let u = &inputs.target_decomp.idiosyncratic;
    let n0 = u.rows();
    let beta_tilde = debias(inputs.fit, inputs.target_decomp, inputs.y_tilde, inputs.theta)?;
    let draws =
        multiplier_bootstrap(u, inputs.theta, inputs.sigma_hat, group, b, studentized, stream)?;
    let interval_critical = quantile(&draws, 1.0 - alpha)?;
    let root_n = (n0 as f64).sqrt();
    let intervals = group
        .iter()
        .map(|&i| {
            let half = if studentized {
                inputs.theta.theta[(i, i)].sqrt() * interval_critical / root_n
            } else {
                interval_critical / root_n
            };
            Interval {
                index: i,
                lo: beta_tilde[i] - half,
                hi: beta_tilde[i] + half,
            }
        })
        .collect();
    let test = adequacy_test(inputs, &beta_tilde, alpha, b, stream)?;
    Ok(InferenceResult {
        beta_tilde,
        theta: inputs.theta.clone(),
        sigma_hat: inputs.sigma_hat,
        n0,
        alpha,
        draws: b,
        group: group.to_vec(),
        studentized,
        interval_critical,
        intervals,
        test,
    })
}

#[derive(Debug, Clone)]
pub struct InferenceConfig {
    pub transfer: TransferConfig,
    pub alpha: f64,
    pub draws: usize,
    /// Coordinates covered by the intervals; all when `None`.
    pub group: Option<Vec<usize>>,
    pub studentized: bool,
    pub nodewise: NodewisePenalty,
    pub seed: u64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            transfer: TransferConfig::default(),
            alpha: 0.05,
            draws: DEFAULT_DRAWS,
            group: None,
            studentized: true,
            nodewise: NodewisePenalty::default(),
            seed: 0,
        }
    }
}

impl InferenceConfig {
    pub fn bootstrap_stream(&self) -> RngStream {
        RngStream::new(self.seed, 0).child(BOOTSTRAP_TAG)
    }
}

/// Detection, transfer fit, nodewise precision on `Û₀` and bootstrap
/// inference in one pass.
pub fn infer(
    target: &Dataset,
    sources: &[Dataset],
    config: &InferenceConfig,
) -> Result<(TransferFit, DetectionReport, InferenceResult)> {
    let prep = prepare_problem(target, sources, &config.transfer)?;
    let (fit, report) = trans_farm_prepared(&prep, &config.transfer)?;
    let theta = nodewise_precision(prep.target.u(), &config.nodewise, &config.transfer.lasso)?;
    let p = target.p();
    let group: Vec<usize> = config.group.clone().unwrap_or_else(|| (0..p).collect());
    let inputs = InferenceInputs {
        fit: &fit,
        target_decomp: &prep.target.decomposition,
        y_tilde: &prep.target.y_tilde,
        theta: &theta,
        sigma_hat: prep.sigma_hat,
    };
    let result = simultaneous_cis(
        &inputs,
        &group,
        config.alpha,
        config.studentized,
        config.draws,
        config.bootstrap_stream(),
    )?;
    Ok((fit, report, result))
}
