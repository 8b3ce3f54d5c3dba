//! Pauli matrices and σz eigenvectors.

use num_complex::Complex;
use num_traits::{One, Zero};

use super::{ComplexMatrix, HermitianOperator};
use crate::scalar::Real;

fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

fn op<T: Real>(entries: [Complex<T>; 4]) -> HermitianOperator<T> {
    HermitianOperator::from_hermitian_part(
        &ComplexMatrix::new(2, 2, entries.to_vec()).expect("2x2"),
    )
}

pub fn sx<T: Real>() -> HermitianOperator<T> {
    op([c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn sy<T: Real>() -> HermitianOperator<T> {
    op([c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn sz<T: Real>() -> HermitianOperator<T> {
    op([c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// σz eigenvector with eigenvalue +1.
pub fn plus_one<T: Real>() -> Vec<Complex<T>> {
    vec![Complex::one(), Complex::zero()]
}

/// σz eigenvector with eigenvalue −1.
pub fn minus_one<T: Real>() -> Vec<Complex<T>> {
    vec![Complex::zero(), Complex::one()]
}

/// The single-qubit constants bundled together.
#[derive(Clone, Debug)]
pub struct PauliConstants<T> {
    pub sx: HermitianOperator<T>,
    pub sy: HermitianOperator<T>,
    pub sz: HermitianOperator<T>,
    pub plus_one: Vec<Complex<T>>,
    pub minus_one: Vec<Complex<T>>,
}

impl<T: Real> PauliConstants<T> {
    pub fn new() -> Self {
        Self {
            sx: sx(),
            sy: sy(),
            sz: sz(),
            plus_one: plus_one(),
            minus_one: minus_one(),
        }
    }

    /// [σx, σy, σz].
    pub fn all(&self) -> [&HermitianOperator<T>; 3] {
        [&self.sx, &self.sy, &self.sz]
    }
}

impl<T: Real> Default for PauliConstants<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvectors_and_squares() {
        let p = PauliConstants::<f64>::new();
        assert_eq!(p.sz.matrix().matvec(&p.plus_one), p.plus_one);
        let neg: Vec<_> = p.minus_one.iter().map(|z| -z).collect();
        assert_eq!(p.sz.matrix().matvec(&p.minus_one), neg);
        for s in p.all() {
            assert_eq!(s.matrix().matmul(s.matrix()), ComplexMatrix::identity(2));
        }
    }

    #[test]
    fn anticommutation() {
        // σx σy = iσz
        let p = PauliConstants::<f64>::new();
        let xy = p.sx.matrix().matmul(p.sy.matrix());
        assert_eq!(xy, p.sz.matrix().scale(Complex::new(0.0, 1.0)));
    }
}
