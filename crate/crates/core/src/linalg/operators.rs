use num_complex::Complex;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::{hermitian_eig, ComplexMatrix, LinalgError, HERMITIAN_EPS, VALIDITY_EPS};
use crate::scalar::Real;

fn require_square<T: Real>(m: &ComplexMatrix<T>) -> Result<(), LinalgError> {
    if m.is_square() {
        Ok(())
    } else {
        Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        })
    }
}

/// A square matrix with ‖M − M†‖_F ≤ 1e−10·max(1, ‖M‖_F).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent, bound(serialize = "T: Real + Serialize"))]
pub struct HermitianOperator<T>(ComplexMatrix<T>);

impl<T: Real> HermitianOperator<T> {
    pub fn new(m: ComplexMatrix<T>) -> Result<Self, LinalgError> {
        require_square(&m)?;
        let residual = m.hermiticity_residual();
        let bound = T::tol(HERMITIAN_EPS) * T::one().max(m.frobenius_norm());
        if residual > bound {
            return Err(LinalgError::NotHermitian {
                residual: residual.as_f64(),
            });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is Hermitian by construction; symmetrizes away rounding.
    pub fn from_hermitian_part(m: &ComplexMatrix<T>) -> Self {
        Self(m.hermitian_part())
    }

    pub fn zeros(d: usize) -> Self {
        Self(ComplexMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        Self(ComplexMatrix::identity(d))
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        let diag: Vec<_> = diag.iter().map(|&x| Complex::new(x, T::zero())).collect();
        Self(ComplexMatrix::from_diag(&diag))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.0
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn scale(&self, s: T) -> Self {
        Self(self.0.scale_real(s))
    }

    /// Real Hilbert–Schmidt inner product tr(XY) (real for Hermitian X, Y).
    pub fn inner(&self, other: &Self) -> T {
        self.0.hs_inner(&other.0).re
    }

    pub fn norm(&self) -> T {
        self.0.frobenius_norm()
    }

    /// Unitary conjugation W X W†.
    pub fn conjugate_by(&self, w: &UnitaryOperator<T>) -> Self {
        Self::from_hermitian_part(&w.matrix().matmul(&self.0).matmul(&w.matrix().adjoint()))
    }
}

/// A square matrix with ‖U†U − I‖_F ≤ 1e−9·d.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent, bound(serialize = "T: Real + Serialize"))]
pub struct UnitaryOperator<T>(ComplexMatrix<T>);

impl<T: Real> UnitaryOperator<T> {
    pub fn new(m: ComplexMatrix<T>) -> Result<Self, LinalgError> {
        require_square(&m)?;
        let residual = Self::residual_of(&m);
        if residual > T::tol(VALIDITY_EPS) * T::lit(m.rows() as f64) {
            return Err(LinalgError::NotUnitary {
                residual: residual.as_f64(),
            });
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: ComplexMatrix<T>) -> Self {
        Self(m)
    }

    pub fn identity(d: usize) -> Self {
        Self(ComplexMatrix::identity(d))
    }

    /// ‖U†U − I‖_F.
    pub fn residual_of(m: &ComplexMatrix<T>) -> T {
        m.adjoint()
            .matmul(m)
            .distance(&ComplexMatrix::identity(m.rows()))
    }

    pub fn unitarity_residual(&self) -> T {
        Self::residual_of(&self.0)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Composition `self · other` (other acts first).
    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0.matmul(&other.0))
    }
}

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent, bound(serialize = "T: Real + Serialize"))]
pub struct DensityMatrix<T>(ComplexMatrix<T>);

impl<T: Real> DensityMatrix<T> {
    pub fn new(m: ComplexMatrix<T>) -> Result<Self, LinalgError> {
        let h = HermitianOperator::new(m)?;
        let eps = T::tol(VALIDITY_EPS);
        let tr = h.matrix().trace().re;
        if (tr - T::one()).abs() > eps {
            return Err(LinalgError::BadTrace { trace: tr.as_f64() });
        }
        let min = hermitian_eig(&h)?.values[0];
        if min < -eps {
            return Err(LinalgError::NotPositive {
                eigenvalue: min.as_f64(),
            });
        }
        Ok(Self(h.into_matrix()))
    }

    /// Normalizes a positive semidefinite matrix (up to rounding) to unit trace.
    pub(crate) fn from_unnormalized(m: &ComplexMatrix<T>) -> Self {
        let tr = m.trace().re;
        Self(m.hermitian_part().scale_real(T::one() / tr))
    }

    pub(crate) fn new_unchecked(m: ComplexMatrix<T>) -> Self {
        Self(m)
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) nonzero vector.
    pub fn from_pure(psi: &[Complex<T>]) -> Result<Self, LinalgError> {
        let norm2: T = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() {
            return Err(LinalgError::EmptyMatrix);
        }
        if norm2 <= T::zero() || !norm2.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self(ComplexMatrix::outer(psi, psi).scale_real(T::one() / norm2)))
    }

    /// I/d.
    pub fn maximally_mixed(d: usize) -> Self {
        Self(ComplexMatrix::identity(d).scale_real(T::one() / T::lit(d as f64)))
    }

    /// The computational-basis projector |k⟩⟨k|.
    pub fn basis_state(d: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(k, k)] = Complex::one();
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.0
    }

    pub fn trace(&self) -> T {
        self.0.trace().re
    }

    /// tr(ρ²).
    pub fn purity(&self) -> T {
        self.0.hs_inner(&self.0).re
    }

    /// U ρ U†.
    pub fn evolve(&self, u: &UnitaryOperator<T>) -> Self {
        Self(u.matrix().matmul(&self.0).matmul(&u.matrix().adjoint()))
    }

    pub fn as_hermitian(&self) -> HermitianOperator<T> {
        HermitianOperator(self.0.clone())
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for HermitianOperator<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(deserializer)?;
        Self::new(m).map_err(serde::de::Error::custom)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for UnitaryOperator<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(deserializer)?;
        Self::new(m).map_err(serde::de::Error::custom)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for DensityMatrix<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(deserializer)?;
        Self::new(m).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, data: &[f64]) -> ComplexMatrix<f64> {
        ComplexMatrix::from_real(rows, data.len() / rows, data).unwrap()
    }

    #[test]
    fn hermitian_validation() {
        assert!(HermitianOperator::new(m(2, &[1.0, 2.0, 2.0, -1.0])).is_ok());
        assert!(matches!(
            HermitianOperator::new(m(2, &[1.0, 2.0, 0.0, -1.0])),
            Err(LinalgError::NotHermitian { .. })
        ));
        assert!(matches!(
            HermitianOperator::new(m(1, &[1.0, 2.0])),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(m(2, &[0.5, 0.0, 0.0, 0.5])).is_ok());
        assert!(matches!(
            DensityMatrix::new(m(2, &[0.6, 0.0, 0.0, 0.5])),
            Err(LinalgError::BadTrace { .. })
        ));
        assert!(matches!(
            DensityMatrix::new(m(2, &[1.5, 0.0, 0.0, -0.5])),
            Err(LinalgError::NotPositive { .. })
        ));
    }

    #[test]
    fn unitary_validation() {
        assert!(UnitaryOperator::new(m(2, &[0.0, 1.0, 1.0, 0.0])).is_ok());
        assert!(UnitaryOperator::new(m(2, &[1.0, 1.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn from_pure_normalizes() {
        let psi = [Complex::new(3.0f64, 0.0), Complex::new(0.0, 4.0)];
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-14);
    }
}
