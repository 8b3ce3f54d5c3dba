//! Cyclic Jacobi eigensolver for complex Hermitian matrices.

use num_complex::Complex;
use num_traits::Zero;

use super::{ComplexMatrix, HermitianOperator, LinalgError, UnitaryOperator};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `h = V diag(values) V†` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: UnitaryOperator<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// V diag(f(λ)) V†.
    pub fn reassemble(&self, f: impl Fn(T) -> Complex<T>) -> ComplexMatrix<T> {
        let v = self.vectors.matrix();
        let n = v.rows();
        let fl: Vec<Complex<T>> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex::zero();
                for k in 0..n {
                    acc += v[(i, k)] * fl[k] * v[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex<T>> {
        self.vectors.matrix().column(k)
    }
}

fn off_diagonal_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Diagonalizes a Hermitian operator by cyclic complex Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius norm falls below
/// `JACOBI_TOL · max(1, ‖h‖_F)`; at most 100 sweeps are attempted.
pub fn hermitian_eig<T: Real>(h: &HermitianOperator<T>) -> Result<HermitianEigen<T>, LinalgError> {
    let mut a = h.matrix().clone();
    let n = a.rows();
    let mut v = ComplexMatrix::<T>::identity(n);
    let threshold = T::lit(T::JACOBI_TOL) * T::one().max(a.frobenius_norm());

    let mut converged = off_diagonal_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        converged = off_diagonal_norm(&a) <= threshold;
    }
    if !converged {
        return Err(LinalgError::NoConvergence { sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(HermitianEigen {
        values,
        vectors: UnitaryOperator::new_unchecked(vectors),
    })
}

/// One Jacobi rotation annihilating `a[p][q]`, accumulated into `v`.
fn rotate<T: Real>(a: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == T::zero() {
        return;
    }
    // Phase e^{-iφ} reduces the 2x2 block to a real symmetric one.
    let phase = (apq / r).conj();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (T::lit(2.0) * r);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;

    // Rotation restricted to (p, q): [[c, s], [-s·phase, c·phase]].
    let g_pp = Complex::new(c, T::zero());
    let g_pq = Complex::new(s, T::zero());
    let g_qp = phase * (-s);
    let g_qq = phase * c;

    let n = a.rows();
    // A ← A G
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * g_pp + aiq * g_qp;
        a[(i, q)] = aip * g_pq + aiq * g_qq;
    }
    // A ← G† A
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = g_pp.conj() * apj + g_qp.conj() * aqj;
        a[(q, j)] = g_pq.conj() * apj + g_qq.conj() * aqj;
    }
    a[(p, q)] = Complex::zero();
    a[(q, p)] = Complex::zero();
    a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
    a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());

    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * g_pp + viq * g_qp;
        v[(i, q)] = vip * g_pq + viq * g_qq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli, random_hermitian};

    #[test]
    fn sigma_z_spectrum() {
        let e = hermitian_eig(&pauli::sz::<f64>()).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        // Column 0 spans |−1⟩ = (0, 1), column 1 spans |+1⟩ = (1, 0), up to phase.
        assert!((e.eigenvector(0)[1].norm() - 1.0).abs() < 1e-14);
        assert!((e.eigenvector(1)[0].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_identity() {
        let e = hermitian_eig(&HermitianOperator::<f64>::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        assert!(e.vectors.unitarity_residual() < 1e-14);
    }

    #[test]
    fn reconstruction_on_random_6x6() {
        let h = random_hermitian::<f64>(6, 11);
        let e = hermitian_eig(&h).unwrap();
        let back = e.reassemble(|l| Complex::new(l, 0.0));
        assert!(back.distance(h.matrix()) <= 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(e.vectors.unitarity_residual() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let h = random_hermitian::<f32>(4, 3);
        let e = hermitian_eig(&h).unwrap();
        let back = e.reassemble(|l| Complex::new(l, 0.0));
        assert!(back.distance(h.matrix()) <= 1e-4);
    }
}
