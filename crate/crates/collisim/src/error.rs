use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^†| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("unknown register label `{0}`")]
    UnknownLabel(String),

    #[error("register layouts do not match: {0} vs {1}")]
    LayoutMismatch(String, String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("register too large: {qubits} qubits exceeds the {max}-qubit guard")]
    RegisterTooLarge { qubits: usize, max: usize },

    #[error("index {index} out of range for series of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
