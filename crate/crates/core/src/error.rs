use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),
    #[error("coordinate {index} = {value} lies outside the unit cube")]
    OutsideUnitCube { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("output transform {transform} is undefined at {value}")]
    Transform { transform: &'static str, value: f64 },
    #[error("sobol sequence exhausted")]
    SequenceExhausted,
    #[error("sobol dimension {0} is not supported (max {max})", max = crate::sobol::MAX_DIM)]
    SobolDimension(usize),
    #[error("{0}")]
    Validation(String),
    #[error("gaussian process fit failed: {0}")]
    Fit(String),
    #[error("hyperparameter fit failed: every start was numerically singular")]
    HyperparameterFit,
    #[error("q-EI posterior covariance is not positive definite")]
    QeiCovariance,
    #[error("acquisition optimizer found no finite candidate")]
    NoFiniteCandidate,
    #[error("trial budget exhausted")]
    BudgetExhausted,
    #[error("unknown trial {0}")]
    UnknownTrial(usize),
    #[error("trial {0} is not pending")]
    NotPending(usize),
    #[error("trial {0} is still pending")]
    PendingTrial(usize),
    #[error("experiment has no completed trials")]
    NoCompletedTrials,
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
