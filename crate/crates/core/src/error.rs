use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain mismatch between operands")]
    DomainMismatch,
    #[error("box has zero measure")]
    ZeroMeasureBox,
    #[error("function is not flagged as a weight")]
    NotAWeight,
    #[error("cubes come from more than one grid")]
    MixedGrids,
    #[error("pointwise decomposition failed self-verification at cell {cell}: lhs {lhs} > rhs {rhs}")]
    SelfVerificationFailed { cell: usize, lhs: f64, rhs: f64 },
    #[error("supremum diverges: {0}")]
    DivergentSupremum(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("weight vanishes on a cube carrying mass")]
    VanishingWeight,
    #[error("series is not summable: {0}")]
    NonSummable(String),
    #[error("unknown registry id `{0}`")]
    UnknownRegistryId(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
