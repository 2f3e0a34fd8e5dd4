use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violated an operation's precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Not enough data to compute the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// CoV is undefined because the gap mean is zero.
    #[error("undefined CoV: all gaps are zero")]
    UndefinedCov,

    /// Open-queue arrivals at or beyond the service capacity.
    #[error("saturated: utilization {utilization:.6} >= 1 (lambda={lambda}, service={service})")]
    Saturated {
        lambda: f64,
        service: f64,
        utilization: f64,
    },

    /// A state that cannot occur physically (e.g. Q > N would imply a
    /// negative arrival rate).
    #[error("infeasible state: {0}")]
    InfeasibleState(String),

    /// Log file rejected because too many rows failed to parse.
    #[error("{path}: {bad} of {total} rows unparseable (> {limit:.0}% limit)")]
    LogRejected {
        path: PathBuf,
        bad: usize,
        total: usize,
        limit: f64,
    },

    /// The failure rate during a load run exceeded the configured ceiling.
    #[error("run {run}: failure rate {rate:.1}% exceeded ceiling {ceiling:.1}%")]
    FailureCeiling { run: String, rate: f64, ceiling: f64 },

    /// The load-test target could not be reached at all.
    #[error("target unreachable: {0}")]
    TargetUnreachable(String),

    #[error("I/O error{}: {source}", path.as_ref().map(|p| format!(" ({})", p.display())).unwrap_or_default())]
    Io {
        #[source]
        source: std::io::Error,
        path: Option<PathBuf>,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<std::io::Error> for Error {
    fn from(source: std::io::Error) -> Self {
        Error::Io { source, path: None }
    }
}

impl Error {
    pub(crate) fn io(source: std::io::Error, path: impl Into<PathBuf>) -> Self {
        Error::Io {
            source,
            path: Some(path.into()),
        }
    }
}
