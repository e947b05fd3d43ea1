use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("register of {0} qubits is outside the supported range 1..={max}", max = crate::simcore::MAX_QUBITS)]
    QubitCount(usize),

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("entangler needs two distinct qubits, got {0} twice")]
    SameQubit(usize),

    #[error("non-finite angle {0}")]
    NonFiniteAngle(f64),

    #[error("invalid observable: {0}")]
    Observable(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid circuit dimensions: {0}")]
    Dimensions(String),

    #[error("invalid prior data: {0}")]
    PriorData(String),

    #[error("invalid init strategy: {0}")]
    Strategy(String),

    #[error("beta prior is undefined for zero-variance data")]
    DegenerateBeta,

    #[error("invalid diffusion schedule: {0}")]
    Schedule(String),

    #[error("cumulative diffusion rate {0} outside (0, 1]")]
    GammaBar(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dataset {name}: {msg}")]
    Dataset { name: String, msg: String },

    #[error("invalid training config: {0}")]
    Config(String),

    #[error("non-finite loss at epoch {epoch}, step {step}: {value}")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        value: f64,
    },
}
