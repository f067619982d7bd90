use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signal length must be at least 2, got {0}")]
    TooShort(usize),

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("group element rotation {rot} out of range for n = {n}")]
    BadGroupElement { rot: usize, n: usize },

    #[error("Fourier coefficients are not conjugate symmetric (index {0})")]
    NotConjugateSymmetric(usize),

    #[error("tensor order {0} not supported (expected 1, 2 or 3)")]
    BadOrder(usize),

    #[error("oracle size n = {n} exceeds the bound {max}")]
    OracleTooLarge { n: usize, max: usize },

    #[error("vanishing Fourier coefficient at ℓ={0}")]
    VanishingCoefficient(usize),

    #[error("signal length {n} exceeds the sign-search bound {n_max}")]
    SearchTooLarge { n: usize, n_max: usize },

    #[error("moments are for the {found} group but {expected} was requested")]
    GroupMismatch { expected: crate::group::Group, found: crate::group::Group },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty observation set")]
    EmptyObservations,

    #[error("reference signal has zero norm")]
    ZeroReference,

    #[error("no all-nonzero annihilator exists for k = {0}")]
    NoAnnihilator(usize),

    #[error("nothing to plot")]
    EmptyPlot,

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }
}
