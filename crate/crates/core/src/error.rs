use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("probability {0} outside (0,1)")]
    ProbabilityOutOfRange(f64),

    #[error("bi-Lipschitz constant unavailable for {0}")]
    LipschitzUnavailable(String),

    #[error("cost index {index} out of range (sequence has {len} values)")]
    CostOutOfRange { index: usize, len: usize },

    #[error("information matrix is singular (det = {det:e})")]
    SingularInformation { det: f64 },

    #[error("no valid estimate available at period {period}")]
    EstimatorUnavailable { period: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("invalid policy configuration: {0}")]
    InvalidPolicy(String),

    #[error("period {period}: {source}")]
    Episode {
        period: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("log-log fit: {0}")]
    Slope(String),

    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
