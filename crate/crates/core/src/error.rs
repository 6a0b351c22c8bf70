use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("malformed Pauli label {label:?} at position {position}: {reason}")]
    MalformedLabel {
        label: String,
        position: usize,
        reason: &'static str,
    },

    #[error("operator is not Hermitian: {0}")]
    NonHermitian(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{n_qubits} qubits exceed the statevector limit of {limit}")]
    StatevectorLimit { n_qubits: usize, limit: usize },

    #[error("invalid shot model: {0}")]
    InvalidShotModel(String),

    #[error("invalid reference state: {0}")]
    InvalidState(String),

    #[error("duplicate Pauli string {0} in measurement set")]
    DuplicateString(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("every eigenvalue of the overlap matrix fell below the regularization threshold {threshold:e}")]
    AllDiscarded { threshold: f64 },

    #[error("evolved state has zero norm")]
    ZeroNorm,

    #[error("unsupported Haar moment order {0} (supported: 1, 2, 3)")]
    UnsupportedMoment(usize),

    #[error("entry ({row}, {col}): {source}")]
    Entry {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// Failures of the computation itself rather than of its inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::AllDiscarded { .. } | Error::ZeroNorm => true,
            Error::Entry { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn at(self, row: usize, col: usize) -> Self {
        Error::Entry {
            row,
            col,
            source: Box::new(self),
        }
    }
}
