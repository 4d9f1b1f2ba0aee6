use thiserror::Error;

use crate::circuit::ValidationReport;

/// Errors produced by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid circuit: {0}")]
    InvalidCircuit(ValidationReport),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parameter index {index} out of range for {len} parameters")]
    ParamIndexOutOfRange { index: usize, len: usize },

    #[error("parameter {0} is not attached to any rotation gate")]
    NoRotationForParam(usize),

    #[error("unsupported gate for this method: {0}")]
    UnsupportedGate(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("channel is not trace preserving (deviation {0:.3e})")]
    NonTracePreserving(f64),

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("KL undefined: outcome {outcome} has p > 0 but q = 0")]
    KlUndefined { outcome: usize },

    #[error("Fisher discontinuity: outcome {outcome} has vanishing probability but nonzero derivative along parameter {param}")]
    FisherDiscontinuity { outcome: usize, param: usize },

    #[error("rank-change discontinuity: eigenvalue {eigen} vanishes but its derivative along parameter {param} does not")]
    RankChangeDiscontinuity { eigen: usize, param: usize },

    #[error("metric singular - increase lambdaReg")]
    MetricSingular,

    #[error("parameter not identifiable (Fisher matrix singular)")]
    NotIdentifiable,

    #[error("non-identifiable on grid (likelihood is flat)")]
    NonIdentifiableOnGrid,

    #[error("size limit exceeded: {qubits} qubits requested, limit is {limit}")]
    SizeLimit { qubits: usize, limit: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
