//! Dense complex linear algebra used by every other module.
//!
//! Everything here is generic over [`Real`](crate::Real) and pure: no shared
//! state, so all functions are safe to call concurrently.

mod eig;
mod matrix;
mod operators;
mod ops;
pub mod pauli;
mod random;

pub use eig::{hermitian_eig, HermitianEigen};
pub use matrix::ComplexMatrix;
pub use operators::{DensityMatrix, HermitianOperator, UnitaryOperator};
pub use ops::{
    expm_unitary, gate_fidelity, hermitian_function, kron, kron_all, kron_vec, matrix_sqrt_psd,
    partial_trace, uhlmann_fidelity, vector_norm,
};
pub use pauli::PauliConstants;
pub use random::{
    random_density, random_hermitian, random_state_vector, random_unitary, rng_from_seed,
    sample_density, sample_hermitian, sample_state_vector, sample_unitary, SeededRng,
};

use thiserror::Error;

/// Validity tolerance for type invariants (trace, positivity, unitarity).
pub const VALIDITY_EPS: f64 = 1e-9;

/// Relative Hermiticity tolerance.
pub const HERMITIAN_EPS: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("expected {expected} entries, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },
    #[error("trace is {trace}, expected 1")]
    BadTrace { trace: f64 },
    #[error("matrix has negative eigenvalue {eigenvalue:.3e}")]
    NotPositive { eigenvalue: f64 },
    #[error("partial trace factors multiply to {product}, matrix dimension is {dim}")]
    FactorMismatch { product: usize, dim: usize },
    #[error("factor index {index} out of range for {count} factors")]
    FactorIndex { index: usize, count: usize },
    #[error("Jacobi eigensolver did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}
