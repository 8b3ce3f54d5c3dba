//! Seeded random ensembles.
//!
//! All randomness flows through [`SeededRng`] (ChaCha8 seeded from a `u64`), so a
//! given seed reproduces the same matrices on every platform.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ComplexMatrix, DensityMatrix, HermitianOperator, UnitaryOperator};
use crate::scalar::Real;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian with E|z|² = 1.
fn complex_normal<T: Real>(rng: &mut SeededRng) -> Complex<T> {
    let s = T::FRAC_1_SQRT_2();
    Complex::new(T::standard_normal(rng) * s, T::standard_normal(rng) * s)
}

fn ginibre<T: Real>(d: usize, rng: &mut SeededRng) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(d, d, |_, _| complex_normal(rng))
}

/// (X + X†)/2 with complex Gaussian X.
pub fn sample_hermitian<T: Real>(d: usize, rng: &mut SeededRng) -> HermitianOperator<T> {
    HermitianOperator::from_hermitian_part(&ginibre(d, rng))
}

/// GG†/tr(GG†) with complex Gaussian G.
pub fn sample_density<T: Real>(d: usize, rng: &mut SeededRng) -> DensityMatrix<T> {
    let g = ginibre::<T>(d, rng);
    DensityMatrix::from_unnormalized(&g.matmul(&g.adjoint()))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with R's diagonal made positive.
///
/// The QR is done by modified Gram–Schmidt with one reorthogonalization pass,
/// which yields exactly the positive-diagonal-R factor.
pub fn sample_unitary<T: Real>(d: usize, rng: &mut SeededRng) -> UnitaryOperator<T> {
    let g = ginibre::<T>(d, rng);
    let mut cols: Vec<Vec<Complex<T>>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = g.column(j);
        for _ in 0..2 {
            for q in &cols {
                let proj: Complex<T> = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = super::vector_norm(&v);
        for vi in &mut v {
            *vi /= norm;
        }
        cols.push(v);
    }
    UnitaryOperator::new_unchecked(ComplexMatrix::from_fn(d, d, |i, j| cols[j][i]))
}

/// Uniformly random unit vector.
pub fn sample_state_vector<T: Real>(d: usize, rng: &mut SeededRng) -> Vec<Complex<T>> {
    let v: Vec<Complex<T>> = (0..d).map(|_| complex_normal(rng)).collect();
    let norm = super::vector_norm(&v);
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_hermitian<T: Real>(d: usize, seed: u64) -> HermitianOperator<T> {
    sample_hermitian(d, &mut rng_from_seed(seed))
}

pub fn random_density<T: Real>(d: usize, seed: u64) -> DensityMatrix<T> {
    sample_density(d, &mut rng_from_seed(seed))
}

pub fn random_unitary<T: Real>(d: usize, seed: u64) -> UnitaryOperator<T> {
    sample_unitary(d, &mut rng_from_seed(seed))
}

pub fn random_state_vector<T: Real>(d: usize, seed: u64) -> Vec<Complex<T>> {
    sample_state_vector(d, &mut rng_from_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eig;

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(random_hermitian::<f64>(4, 7), random_hermitian::<f64>(4, 7));
        assert_eq!(random_unitary::<f64>(4, 7), random_unitary::<f64>(4, 7));
        assert_eq!(random_density::<f64>(4, 7), random_density::<f64>(4, 7));
        assert_ne!(random_hermitian::<f64>(4, 7), random_hermitian::<f64>(4, 8));
    }

    #[test]
    fn density_is_valid() {
        for seed in 0..10 {
            let rho = random_density::<f64>(5, seed);
            assert!((rho.trace() - 1.0).abs() < 1e-12);
            let e = hermitian_eig(&rho.as_hermitian()).unwrap();
            assert!(e.values[0] >= -1e-12);
            assert!(DensityMatrix::new(rho.into_matrix()).is_ok());
        }
    }

    #[test]
    fn qubit_unitary_columns_orthonormal() {
        for seed in 0..10 {
            let u = random_unitary::<f64>(2, seed);
            let m = u.matrix();
            let c0 = m.column(0);
            let c1 = m.column(1);
            let n0: f64 = c0.iter().map(|z| z.norm_sqr()).sum();
            let n1: f64 = c1.iter().map(|z| z.norm_sqr()).sum();
            let ip: Complex<f64> = c0.iter().zip(&c1).map(|(a, b)| a.conj() * b).sum();
            assert!((n0 - 1.0).abs() < 1e-10 && (n1 - 1.0).abs() < 1e-10);
            assert!(ip.norm() < 1e-10);
        }
    }

    #[test]
    fn larger_unitary_passes_validation() {
        let u = random_unitary::<f64>(16, 3);
        assert!(UnitaryOperator::new(u.into_matrix()).is_ok());
    }
}
