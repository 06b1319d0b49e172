use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series is empty")]
    EmptySeries,

    #[error("series too short: need at least {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    /// The regression design of the conditional least-squares fit is singular.
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("series summation for J({lambda}, {mu}) did not converge within {terms} terms")]
    NonConvergence { lambda: f64, mu: f64, terms: usize },

    #[error("bootstrap replicate {replicate} was degenerate on {attempts} consecutive draws")]
    TooManyRedraws { replicate: usize, attempts: usize },

    #[error("{failed} of {total} Monte Carlo repetitions failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// True for errors caused by the statistical content of the data rather
    /// than by malformed input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSeries(_) | Error::TooManyRedraws { .. }
        )
    }
}
