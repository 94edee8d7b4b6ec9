use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report.
///
/// Variants are grouped loosely by the module that raises them; the CLI maps
/// them onto exit codes via [`Error::kind`].
#[derive(Debug, Error)]
pub enum Error {
    // graph construction and spectral operators
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("adjacency is asymmetric at ({row}, {col}): |W[i][j] - W[j][i]| = {diff:e}")]
    Asymmetric { row: usize, col: usize, diff: f64 },
    #[error("negative edge weight {value} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, value: f64 },
    #[error("nonzero diagonal entry {value} at vertex {index}")]
    NonzeroDiagonal { index: usize, value: f64 },
    #[error("vertex {0} has zero degree")]
    ZeroDegreeVertex(usize),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("lambda_max must be positive, got {0}")]
    NonpositiveLambdaMax(f64),
    #[error("invalid Chebyshev filter: {0}")]
    InvalidFilter(String),

    // neural network
    #[error("backward called without a cached forward pass")]
    MissingCache,
    #[error("dropout rate must lie in [0, 1), got {0}")]
    InvalidRate(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    NonfiniteLoss { epoch: usize, loss: f64 },
    #[error("model has not been trained")]
    ModelNotTrained,

    // baselines
    #[error("requested {requested} components but at most {max} are available")]
    TooManyComponents { requested: usize, max: usize },
    #[error("data has zero variance in every dimension")]
    DegenerateData,

    // classification
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("no training data")]
    EmptyData,
    #[error("{samples} samples cannot be split into {folds} folds")]
    TooFewSamples { samples: usize, folds: usize },
    #[error("training split of fold {0} is missing a class")]
    FoldMissingClass(usize),
    #[error("labels must be -1 or +1, found {0}")]
    InvalidLabel(f64),

    // connectivity
    #[error("time series too short: {available} usable observations, need {required}")]
    TooShort { available: usize, required: usize },
    #[error("rank-deficient regression design")]
    SingularRegression,

    // synthetic data and files
    #[error("smooth band {band} exceeds graph size {n}")]
    BandTooWide { band: usize, n: usize },
    #[error("invalid noise specification: {0}")]
    InvalidNoiseSpec(String),
    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Serialization(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Input,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NoConvergence { .. } | Error::NonfiniteLoss { .. } => ErrorKind::Numerical,
            Error::MalformedFile { .. } | Error::Io { .. } => ErrorKind::Input,
            Error::InvalidConfig(_) | Error::InvalidRate(_) | Error::InvalidNoiseSpec(_) => {
                ErrorKind::Usage
            }
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::MalformedFile {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
