use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max |m - m^H| = {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("eigenvalue {value:.3e} is below the tolerance for a nonnegative spectrum")]
    NegativeEigenvalue { value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown register segment `{0}`")]
    UnknownSegment(String),

    #[error("invalid register layout: {0}")]
    InvalidLayout(String),

    #[error("rank {rank} out of range for a {qubits}-qubit state")]
    RankOutOfRange { qubits: usize, rank: usize },

    #[error("{ancilla} ancilla qubits cannot purify a rank-{rank} state")]
    InsufficientAncilla { ancilla: usize, rank: usize },

    #[error("register of {qubits} qubits exceeds the qubit budget of {budget}")]
    RegisterTooLarge { qubits: usize, budget: usize },

    #[error("{0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("eigenvalue {value:.6} of the encoded operator lies outside [0, 1]")]
    SpectrumOutOfRange { value: f64 },

    #[error("value {value} out of range: {what}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),

    #[error("block-encoding violated: error {measured:.3e} exceeds claimed {claimed:.3e}")]
    EncodingViolated { measured: f64, claimed: f64 },

    #[error("unknown verification suite `{name}` (available: {available})")]
    UnknownSuite { name: String, available: String },

    #[error("non-finite value in column `{0}`")]
    NonFinite(String),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
