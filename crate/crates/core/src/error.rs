use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate feature {index}: zero variance")]
    DegenerateFeature { index: usize },

    #[error("degenerate statistic {0}: zero standard deviation")]
    DegenerateStatistic(&'static str),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("operating point {0:?} outside the box [{1}, {2}]")]
    OutOfBox([f64; 3], f64, f64),

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("missing class {0} in training data")]
    MissingClass(i8),

    #[error("PMV clothing temperature iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("Cholesky factorization failed even with jitter {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("rank deficient: {distinct} distinct abscissae, need at least {needed}")]
    RankDeficient { distinct: usize, needed: usize },

    #[error("singular normal-equation matrix")]
    Singular,

    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),

    #[error("no rows for group {0}")]
    EmptyGroup(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    /// Short category tag printed by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. }
            | Error::EmptyInput(_)
            | Error::Domain(_)
            | Error::OutOfBox(..)
            | Error::Config(_)
            | Error::UnknownScenario(_) => "input",
            Error::DegenerateFeature { .. }
            | Error::DegenerateStatistic(_)
            | Error::MissingClass(_)
            | Error::EmptyGroup(_)
            | Error::RankDeficient { .. } => "data",
            Error::Divergence { .. }
            | Error::NonConvergence { .. }
            | Error::Factorization { .. }
            | Error::Singular => "numeric",
            Error::Io(_) | Error::Csv(_) | Error::Serde(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
