use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    EigenNotConverged { sweeps: usize, residual: f64 },

    #[error("lasso did not converge after {iterations} sweeps (kkt violation {kkt_violation:e})")]
    LassoNotConverged {
        iterations: usize,
        kkt_violation: f64,
        best: Vec<f64>,
    },

    #[error("scaled lasso did not converge after {iterations} alternations")]
    ScaledLassoNotConverged { iterations: usize, sigma: f64 },

    #[error("response has zero variance")]
    ZeroVariance,

    #[error("degenerate column {index} in nodewise regression (tau^2 = {tau_sq:e})")]
    DegenerateColumn { index: usize, tau_sq: f64 },

    #[error("{failed} of {total} replications failed; first failure: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Parse(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Whether the failure is numerical rather than a usage or input problem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::NotPositiveDefinite { .. }
                | Error::EigenNotConverged { .. }
                | Error::LassoNotConverged { .. }
                | Error::ScaledLassoNotConverged { .. }
                | Error::ZeroVariance
                | Error::DegenerateColumn { .. }
                | Error::NotSymmetric { .. }
                | Error::NonFinite(_)
                | Error::TooManyFailures { .. }
        )
    }
}

pub(crate) trait ResultExt<T> {
    fn context(self, ctx: impl FnOnce() -> String) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, ctx: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| e.context(ctx()))
    }
}
