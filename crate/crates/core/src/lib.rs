//! Simulation and analysis toolkit for universal quantum interfaces: a single
//! controllable qubit `Q` coupled to a system `S` through a fixed `A ⊗ σz`
//! interaction.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense complex linear algebra (Kronecker products, partial traces,
//!   Jacobi eigendecomposition, unitary propagators, seeded random ensembles).
//! - [`controllability`]: dynamical Lie algebra closure and the controllability
//!   verdict for a system plus interface, or two systems bridged by one interface.
//! - [`synthesis`]: piecewise-constant pulse optimization that realizes target
//!   unitaries using only the interface controls.
//! - [`measurement`]: the two-outcome instrument with Kraus operators
//!   `cos(θG)`, `sin(θG)`, its channel, a joint-evolution oracle, and sequential
//!   generalized measurements.
//! - [`network`]: several systems joined by interface qubits, with the decoupling
//!   identity, routing, circuit compilation and execution.
//!
//! The numeric core (`linalg`, `controllability`, `measurement`) is generic over
//! [`Real`] (`f32` or `f64`); the aliases below fix it to `f64`, which is what the
//! optimizer and network simulator use.

pub mod controllability;
pub mod linalg;
pub mod measurement;
pub mod network;
mod scalar;
pub mod synthesis;

pub use scalar::Real;

pub type CMatrix = linalg::ComplexMatrix<f64>;
pub type Hermitian = linalg::HermitianOperator<f64>;
pub type Unitary = linalg::UnitaryOperator<f64>;
pub type Density = linalg::DensityMatrix<f64>;
pub type Complex64 = num_complex::Complex<f64>;
