//! Command-line driver: `fit`, `detect`, `transfer`, `infer` and `simulate`.
//!
//! Settings are resolved as defaults, then the `--config` file, then flags.
//! Every flag corresponds to a config key with dashes for underscores
//! (`--lambda-c` sets `lambda_c`, `--sim-n0` sets `sim_n0`); `--B` sets
//! `bootstrap_draws` and the repeatable `--source` sets `sources`.

mod config;
mod io;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

pub use config::{parse_mode, parse_rank, parse_threshold, GroupSpec, RunConfig, SourceSet};
pub use io::{
    fmt_num, ingest_dataset, test_line, write_dataset, write_detection, write_detections,
    write_fit, write_intervals, write_results, write_summary,
};

use crate::error::{Error, Result};
use crate::inference::{infer, InferenceConfig};
use crate::simlab::run_experiment;
use crate::transfer::{detect_sources, oracle_trans_farm, trans_farm, Dataset, Role, TransferConfig};

const SHARED: &[(&str, &str)] = &[
    ("seed", "Base random seed"),
    ("out", "Output directory"),
    ("threads", "Worker threads (auto or a positive integer)"),
];

const DATA: &[(&str, &str)] = &[
    ("target", "Target CSV file"),
    ("response", "Response column name"),
    ("rank", "Factor rank (auto or an integer)"),
    ("lambda_c", "Penalty constant"),
    ("folds", "Detection folds"),
    ("threshold", "Detection threshold (2L0 or eps0:<real>)"),
    ("mode", "farm or lasso"),
];

const INFER: &[(&str, &str)] = &[
    ("alpha", "Significance level"),
    ("group", "Interval coordinates (all or 1-based i,j,k)"),
    ("studentized", "Studentized intervals (true or false)"),
];

const SIM: &[(&str, &str)] = &[
    ("sim_n0", "Target sample size"),
    ("sim_nk", "Source sample size"),
    ("sim_p", "Dimension"),
    ("sim_s", "Target sparsity"),
    ("sim_k", "Number of sources"),
    ("sim_informative_sizes", "Informative set sizes to sweep"),
    ("sim_eta", "Contrast budget"),
    ("sim_r", "Number of factors"),
    ("sim_signal", "Nonzero coefficient value"),
    ("sim_gamma0", "Target factor coefficients"),
    ("sim_informative_contrast", "Informative contrast scale"),
    ("sim_adversarial_contrast", "Non-informative contrast scale"),
    ("sim_informative_gamma_shift", "Informative factor-coefficient shift"),
    ("sim_adversarial_gamma_shift", "Non-informative factor-coefficient shift"),
    ("sim_loading_bound", "Loading entries are uniform on [-b, b]"),
    ("sim_toeplitz_rho", "Idiosyncratic correlation"),
    ("sim_source_cov_scale", "Source covariance perturbation scale"),
    ("sim_replications", "Replications per informative size"),
    ("sim_estimators", "Estimator roster"),
    ("sim_fixed_rank", "Use the true factor rank"),
    ("sim_redraw_informative", "Redraw the informative set every replication"),
    ("sim_timing", "Record wall-clock seconds"),
];

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

fn keyed_args(keys: &[(&'static str, &'static str)]) -> Vec<Arg> {
    keys.iter()
        .map(|&(key, help)| Arg::new(key).long(flag(key)).value_name("VALUE").help(help))
        .collect()
}

fn subcommand(name: &'static str, about: &'static str) -> Command {
    Command::new(name)
        .about(about)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .help("Flat key = value settings file"),
        )
        .args(keyed_args(SHARED))
}

fn data_subcommand(name: &'static str, about: &'static str) -> Command {
    subcommand(name, about).args(keyed_args(DATA)).arg(
        Arg::new("sources")
            .long("source")
            .value_name("PATH")
            .action(ArgAction::Append)
            .help("Source CSV file (repeatable)"),
    )
}

pub fn command() -> Command {
    Command::new("transfarm")
        .about("Transfer learning for factor-augmented sparse linear models")
        .subcommand_required(true)
        .subcommand(
            data_subcommand("fit", "Two-step fit on the target and a given source set")
                .arg(
                    Arg::new("sources_set")
                        .long("sources-set")
                        .value_name("LIST")
                        .help("Sources to pool (all or 1-based i,j,k)"),
                ),
        )
        .subcommand(data_subcommand("detect", "Informative-source detection"))
        .subcommand(data_subcommand("transfer", "Detection followed by the two-step fit"))
        .subcommand(
            data_subcommand("infer", "Simultaneous intervals and the adequacy test")
                .args(keyed_args(INFER))
                .arg(
                    Arg::new("bootstrap_draws")
                        .long("B")
                        .value_name("INT")
                        .help("Bootstrap draws"),
                ),
        )
        .subcommand(
            subcommand("simulate", "Monte-Carlo comparison of the estimators")
                .args(keyed_args(&[
                    ("lambda_c", "Penalty constant"),
                    ("folds", "Detection folds"),
                    ("threshold", "Detection threshold (2L0 or eps0:<real>)"),
                ]))
                .args(keyed_args(SIM)),
        )
}

fn resolve(matches: &ArgMatches) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = matches.get_one::<String>("config") {
        cfg.apply_file(Path::new(path))?;
    }
    for id in matches.ids() {
        let key = id.as_str();
        if key == "config" || matches.value_source(key) != Some(clap::parser::ValueSource::CommandLine) {
            continue;
        }
        if key == "sources" {
            cfg.sources = matches
                .get_many::<String>(key)
                .into_iter()
                .flatten()
                .map(Into::into)
                .collect();
            continue;
        }
        if let Some(value) = matches.get_one::<String>(key) {
            cfg.set(key, value)?;
        }
    }
    Ok(cfg)
}

fn transfer_config(cfg: &RunConfig) -> TransferConfig {
    TransferConfig {
        mode: cfg.mode,
        rank: cfg.rank,
        lambda_c: cfg.lambda_c,
        folds: cfg.folds,
        threshold: cfg.threshold,
        seed: cfg.seed,
        ..TransferConfig::default()
    }
}

fn load_data(cfg: &RunConfig) -> Result<(Dataset, Vec<Dataset>)> {
    let target = cfg
        .target
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--target is required".into()))?;
    let target = ingest_dataset(target, &cfg.response, Role::Target)?;
    let sources = cfg
        .sources
        .iter()
        .enumerate()
        .map(|(k, path)| ingest_dataset(path, &cfg.response, Role::Source(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok((target, sources))
}

fn one_based(list: &[usize], bound: usize, what: &str) -> Result<Vec<usize>> {
    list.iter()
        .map(|&i| {
            if i == 0 || i > bound {
                Err(Error::InvalidArgument(format!("{what} {i} out of range 1..={bound}")))
            } else {
                Ok(i - 1)
            }
        })
        .collect()
}

fn prepare_out(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|source| Error::Io {
        path: cfg.out.display().to_string(),
        source,
    })
}

fn execute(name: &str, cfg: &RunConfig) -> Result<()> {
    let out = |file: &str| cfg.out.join(file);
    match name {
        "fit" => {
            let (target, sources) = load_data(cfg)?;
            let set = match &cfg.sources_set {
                SourceSet::All => (0..sources.len()).collect(),
                SourceSet::List(list) => one_based(list, sources.len(), "source")?,
            };
            let fit = oracle_trans_farm(&target, &sources, &set, &transfer_config(cfg))?;
            prepare_out(cfg)?;
            write_fit(&out("fit.csv"), &fit)
        }
        "detect" => {
            let (target, sources) = load_data(cfg)?;
            let report = detect_sources(&target, &sources, &transfer_config(cfg))?;
            prepare_out(cfg)?;
            write_detection(&out("detection.csv"), &report)
        }
        "transfer" => {
            let (target, sources) = load_data(cfg)?;
            let (fit, report) = trans_farm(&target, &sources, &transfer_config(cfg))?;
            prepare_out(cfg)?;
            write_detection(&out("detection.csv"), &report)?;
            write_fit(&out("fit.csv"), &fit)
        }
        "infer" => {
            let (target, sources) = load_data(cfg)?;
            let group = match &cfg.group {
                GroupSpec::All => None,
                GroupSpec::List(list) => Some(one_based(list, target.p(), "coordinate")?),
            };
            let icfg = InferenceConfig {
                transfer: transfer_config(cfg),
                alpha: cfg.alpha,
                draws: cfg.bootstrap_draws,
                group,
                studentized: cfg.studentized,
                seed: cfg.seed,
                ..InferenceConfig::default()
            };
            let (fit, report, result) = infer(&target, &sources, &icfg)?;
            let line = test_line(&result);
            prepare_out(cfg)?;
            write_intervals(&out("intervals.csv"), &result)?;
            io::write_text(&out("test.txt"), &format!("{line}\n"))?;
            write_detection(&out("detection.csv"), &report)?;
            write_fit(&out("fit.csv"), &fit)?;
            println!("{line}");
            Ok(())
        }
        "simulate" => {
            let mut sim = cfg.sim.clone();
            sim.seed = cfg.seed;
            sim.lambda_c = cfg.lambda_c;
            sim.folds = cfg.folds;
            sim.threshold = cfg.threshold;
            let result = run_experiment(&sim)?;
            prepare_out(cfg)?;
            write_results(&out("results.csv"), &result.rows)?;
            write_summary(&out("summary.csv"), &result.summary)?;
            write_detections(&out("detections.csv"), &result.rows)?;
            for f in &result.failures {
                eprintln!(
                    "warning: A_size {} replication {} failed: {}",
                    f.informative_size,
                    f.replication + 1,
                    f.message
                );
            }
            Ok(())
        }
        other => Err(Error::InvalidArgument(format!("unknown subcommand {other}"))),
    }
}

fn run_with_threads(name: &str, cfg: &RunConfig) -> Result<()> {
    match cfg.threads {
        None => execute(name, cfg),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(|| execute(name, cfg))
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and maps the
/// outcome to an exit code: 0 success, 1 usage or input error, 2 numerical
/// failure.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let outcome = resolve(sub).and_then(|cfg| run_with_threads(name, &cfg));
    match outcome {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
