use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid parameters: {0}")]
    InvalidGrid(String),

    #[error("grid does not close under {0}")]
    SymmetryNotExact(String),

    #[error("basis of {requested} states exceeds the budget of {budget}")]
    BudgetExceeded { requested: u128, budget: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("one-particle map does not preserve the grid: {0}")]
    NotGridPreserving(String),

    #[error("polarization singular at k-point {index} (k = [{k0:.6}, {k1:.6}, {k2:.6}])")]
    SingularPolarization { index: usize, k0: f64, k1: f64, k2: f64 },

    #[error("polarization not transverse-orthonormal at k-point {index} (residual {residual:.3e})")]
    NotTransverse { index: usize, residual: f64 },

    #[error("matrix is not Hermitian (relative residual {0:.3e})")]
    NotHermitian(f64),

    #[error("dimension {dim} exceeds the dense threshold {threshold}")]
    DenseThreshold { dim: usize, threshold: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("operator does not commute with the Hamiltonian (residual {0:.3e})")]
    NotCommuting(f64),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
