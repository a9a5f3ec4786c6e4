use thiserror::Error;

pub type Result<T> = std::result::Result<T, QclabError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QclabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    Index { index: usize, n_qubits: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("dataset error: {0}")]
    Dataset(String),
}
