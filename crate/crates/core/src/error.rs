use thiserror::Error;

/// Errors raised by the simulator, the loss functions and the experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    Index { index: usize, n_qubits: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
