use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::factor::RankSpec;
use crate::inference::DEFAULT_DRAWS;
use crate::simlab::{Estimator, SimConfig};
use crate::solver::DEFAULT_LAMBDA_C;
use crate::transfer::{Mode, Threshold};

/// Source set of the `fit` subcommand, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceSet {
    All,
    List(Vec<usize>),
}

/// Coordinates covered by the intervals, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupSpec {
    All,
    List(Vec<usize>),
}

/// Every setting of every subcommand. Keys of the config file are the field
/// names; simulation fields use a `sim_` prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub target: Option<PathBuf>,
    pub sources: Vec<PathBuf>,
    pub response: String,
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads; available parallelism when `None`.
    pub threads: Option<usize>,
    pub rank: RankSpec,
    pub lambda_c: f64,
    pub folds: usize,
    pub threshold: Threshold,
    pub mode: Mode,
    pub sources_set: SourceSet,
    pub alpha: f64,
    pub bootstrap_draws: usize,
    pub group: GroupSpec,
    pub studentized: bool,
    pub sim: SimConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            target: None,
            sources: Vec::new(),
            response: "y".into(),
            out: PathBuf::from("."),
            seed: 0,
            threads: None,
            rank: RankSpec::default(),
            lambda_c: DEFAULT_LAMBDA_C,
            folds: 3,
            threshold: Threshold::TwiceTargetLoss,
            mode: Mode::Farm,
            sources_set: SourceSet::List(Vec::new()),
            alpha: 0.05,
            bootstrap_draws: DEFAULT_DRAWS,
            group: GroupSpec::All,
            studentized: true,
            sim: SimConfig::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid value '{value}' for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Parse(format!("invalid boolean '{value}' for {key}"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_indices(key: &str, value: &str) -> Result<Vec<usize>> {
    let list: Vec<usize> = parse_list(key, value)?;
    if list.contains(&0) {
        return Err(Error::Parse(format!("{key} indices start at 1")));
    }
    Ok(list)
}

pub fn parse_rank(value: &str) -> Result<RankSpec> {
    let v = value.trim();
    if v.eq_ignore_ascii_case("auto") {
        Ok(RankSpec::default())
    } else {
        Ok(RankSpec::Fixed(parse("rank", v)?))
    }
}

pub fn parse_threshold(value: &str) -> Result<Threshold> {
    let v = value.trim();
    if v.eq_ignore_ascii_case("2L0") {
        return Ok(Threshold::TwiceTargetLoss);
    }
    if let Some(rest) = v.strip_prefix("eps0:") {
        let eps: f64 = parse("threshold", rest)?;
        if !(eps >= 0.0) {
            return Err(Error::Parse(format!("eps0 must be >= 0, got {eps}")));
        }
        return Ok(Threshold::Eps0(eps));
    }
    Err(Error::Parse(format!(
        "invalid threshold '{value}', expected 2L0 or eps0:<real>"
    )))
}

pub fn parse_mode(value: &str) -> Result<Mode> {
    match value.trim().to_ascii_lowercase().as_str() {
        "farm" => Ok(Mode::Farm),
        "lasso" => Ok(Mode::PlainLasso),
        _ => Err(Error::Parse(format!(
            "invalid mode '{value}', expected farm or lasso"
        ))),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let sim = &mut self.sim;
        match key {
            "target" => self.target = Some(PathBuf::from(value.trim())),
            "sources" => {
                self.sources = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from)
                    .collect()
            }
            "response" => self.response = value.trim().to_string(),
            "out" => self.out = PathBuf::from(value.trim()),
            "seed" => self.seed = parse(key, value)?,
            "threads" => {
                self.threads = if value.trim().eq_ignore_ascii_case("auto") {
                    None
                } else {
                    let t: usize = parse(key, value)?;
                    if t == 0 {
                        return Err(Error::Parse("threads must be at least 1".into()));
                    }
                    Some(t)
                }
            }
            "rank" => self.rank = parse_rank(value)?,
            "lambda_c" => self.lambda_c = parse(key, value)?,
            "folds" => self.folds = parse(key, value)?,
            "threshold" => self.threshold = parse_threshold(value)?,
            "mode" => self.mode = parse_mode(value)?,
            "sources_set" => {
                self.sources_set = if value.trim().eq_ignore_ascii_case("all") {
                    SourceSet::All
                } else {
                    SourceSet::List(parse_indices(key, value)?)
                }
            }
            "alpha" => self.alpha = parse(key, value)?,
            "bootstrap_draws" => self.bootstrap_draws = parse(key, value)?,
            "group" => {
                self.group = if value.trim().eq_ignore_ascii_case("all") {
                    GroupSpec::All
                } else {
                    GroupSpec::List(parse_indices(key, value)?)
                }
            }
            "studentized" => self.studentized = parse_bool(key, value)?,
            "sim_n0" => sim.n0 = parse(key, value)?,
            "sim_nk" => sim.nk = parse(key, value)?,
            "sim_p" => sim.p = parse(key, value)?,
            "sim_s" => sim.s = parse(key, value)?,
            "sim_k" => sim.sources = parse(key, value)?,
            "sim_informative_sizes" => sim.informative_sizes = parse_list(key, value)?,
            "sim_eta" => sim.eta = parse(key, value)?,
            "sim_r" => sim.r = parse(key, value)?,
            "sim_signal" => sim.signal = parse(key, value)?,
            "sim_gamma0" => sim.gamma0 = parse_list(key, value)?,
            "sim_informative_contrast" => sim.informative_contrast = parse(key, value)?,
            "sim_adversarial_contrast" => sim.adversarial_contrast = parse(key, value)?,
            "sim_informative_gamma_shift" => sim.informative_gamma_shift = parse(key, value)?,
            "sim_adversarial_gamma_shift" => sim.adversarial_gamma_shift = parse(key, value)?,
            "sim_loading_bound" => sim.loading_bound = parse(key, value)?,
            "sim_toeplitz_rho" => sim.toeplitz_rho = parse(key, value)?,
            "sim_source_cov_scale" => sim.source_cov_scale = parse(key, value)?,
            "sim_replications" => sim.replications = parse(key, value)?,
            "sim_estimators" => {
                sim.estimators = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse::<Estimator>)
                    .collect::<Result<_>>()?
            }
            "sim_fixed_rank" => sim.fixed_rank = parse_bool(key, value)?,
            "sim_redraw_informative" => sim.redraw_informative = parse_bool(key, value)?,
            "sim_timing" => sim.timing = parse_bool(key, value)?,
            _ => return Err(Error::Parse(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file. Blank lines and lines starting
    /// with `#` are skipped.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_str(&text)
    }
}
