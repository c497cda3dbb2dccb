use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid NK parameters: n = {n}, k = {k} (need n >= 1, k < n and k <= 24)")]
    InvalidNk { n: usize, k: usize },

    #[error("solution has length {got}, model expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("locus index {index} out of range for n = {n}")]
    LocusOutOfRange { index: usize, n: usize },

    #[error("locus set is empty")]
    EmptyLoci,

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown strategy {0:?} (expected one of Best+I, Conf+I, Best+LI, Conf+LI, LMaj+LI)")]
    UnknownStrategy(String),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("degree distribution has zero variance")]
    ZeroVariance,

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("no connected ordered pairs")]
    NoConnectedPairs,

    #[error("no qualifying transitions into grade {0}")]
    NoTransitions(String),

    #[error("unknown grade label {0:?}")]
    UnknownGrade(String),

    #[error("project {0:?} has no articles")]
    EmptyProject(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
