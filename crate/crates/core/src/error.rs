use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid dimension {0} is not supported (expected 1 or 2)")]
    InvalidDimension(usize),
    #[error("grid extents and cells_per_unit must be positive")]
    ZeroExtent,
    #[error("index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("coefficient `{field}` must be positive at node {node}")]
    NonpositiveCoefficient { field: &'static str, node: usize },
    #[error("potential is negative at node {0}")]
    NegativePotential(usize),
    #[error("index set is empty")]
    EmptyIndexSet,
    #[error("potential vanishes identically; the operator is singular")]
    DegeneratePotential,
    #[error("{solver} did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("landscape is not strictly positive at node {node} (u = {value:e})")]
    NonpositiveLandscape { node: usize, value: f64 },
    #[error("energy level must be nonnegative, got {0}")]
    NegativeLevel(f64),
    #[error("source set is empty")]
    EmptySourceSet,
    #[error("components {0} and {1} overlap")]
    OverlappingComponents(usize, usize),
    #[error("sublevel set E({0}) is empty")]
    EmptyWellSet(f64),
    #[error("requested {k} eigenpairs but the problem has only {dof} degrees of freedom")]
    KExceedsDof { k: usize, dof: usize },
    #[error("subregion for cluster {0} is empty")]
    EmptyOmega(usize),
    #[error("landscape residual {0:e} is too large to certify the identity")]
    StaleLandscape(f64),
    #[error("test function is nonzero at node {0} outside the eigenvector's domain")]
    InadmissibleTestFunction(usize),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("realization with seed {0} has an identically zero potential")]
    AllZeroRealization(u64),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable tag, used in `error.json` and records.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "InvalidDimension",
            Error::ZeroExtent => "ZeroExtent",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::NonpositiveCoefficient { .. } => "NonpositiveCoefficient",
            Error::NegativePotential(_) => "NegativePotential",
            Error::EmptyIndexSet => "EmptyIndexSet",
            Error::DegeneratePotential => "DegeneratePotential",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NonpositiveLandscape { .. } => "NonpositiveLandscape",
            Error::NegativeLevel(_) => "NegativeLevel",
            Error::EmptySourceSet => "EmptySourceSet",
            Error::OverlappingComponents(..) => "OverlappingComponents",
            Error::EmptyWellSet(_) => "EmptyWellSet",
            Error::KExceedsDof { .. } => "KExceedsDof",
            Error::EmptyOmega(_) => "EmptyOmega",
            Error::StaleLandscape(_) => "StaleLandscape",
            Error::InadmissibleTestFunction(_) => "InadmissibleTestFunction",
            Error::HypothesisViolated(_) => "HypothesisViolated",
            Error::AllZeroRealization(_) => "AllZeroRealization",
            Error::InsufficientData(_) => "InsufficientData",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Factorization(_) => "Factorization",
            Error::Io(_) => "Io",
            Error::Parse(_) => "Parse",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
