use num_complex::Complex;

use super::{
    hermitian_eig, ComplexMatrix, DensityMatrix, HermitianOperator, LinalgError, UnitaryOperator,
};
use crate::scalar::Real;

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Kronecker product of a sequence of matrices, left to right.
pub fn kron_all<'a, T: Real>(factors: impl IntoIterator<Item = &'a ComplexMatrix<T>>) -> ComplexMatrix<T> {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Kronecker product of state vectors.
pub fn kron_vec<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

pub fn vector_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Traces out every tensor factor not listed in `keep`.
///
/// `dims` gives the factor dimensions in order; the kept factors appear in the
/// output in ascending index order regardless of the order of `keep`.
pub fn partial_trace<T: Real>(
    m: &ComplexMatrix<T>,
    dims: &[usize],
    keep: &[usize],
) -> Result<ComplexMatrix<T>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let product: usize = dims.iter().product();
    if product != m.rows() || dims.contains(&0) {
        return Err(LinalgError::FactorMismatch {
            product,
            dim: m.rows(),
        });
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(LinalgError::FactorIndex {
            index: bad,
            count: dims.len(),
        });
    }

    let kept: Vec<usize> = (0..dims.len()).filter(|i| keep.contains(i)).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let keep_dim: usize = kept.iter().map(|&i| dims[i]).product();
    let trace_dim: usize = traced.iter().map(|&i| dims[i]).product();

    // Row-major strides of the full index.
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offsets = |factors: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for &f in factors.iter().rev() {
            off += (idx % dims[f]) * strides[f];
            idx /= dims[f];
        }
        off
    };
    let keep_off: Vec<usize> = (0..keep_dim).map(|a| offsets(&kept, a)).collect();
    let trace_off: Vec<usize> = (0..trace_dim).map(|b| offsets(&traced, b)).collect();

    Ok(ComplexMatrix::from_fn(keep_dim, keep_dim, |a, a2| {
        trace_off
            .iter()
            .map(|&t| m[(keep_off[a] + t, keep_off[a2] + t)])
            .sum()
    }))
}

/// V f(Λ) V† for a Hermitian operator with eigendecomposition V Λ V†.
pub fn hermitian_function<T: Real>(
    h: &HermitianOperator<T>,
    f: impl Fn(T) -> Complex<T>,
) -> Result<ComplexMatrix<T>, LinalgError> {
    Ok(hermitian_eig(h)?.reassemble(f))
}

/// e^{−iht}, computed by diagonalizing `h` and exponentiating the phases.
pub fn expm_unitary<T: Real>(h: &HermitianOperator<T>, t: T) -> Result<UnitaryOperator<T>, LinalgError> {
    if t.is_zero() {
        return Ok(UnitaryOperator::identity(h.dim()));
    }
    let m = hermitian_function(h, |l| Complex::from_polar(T::one(), -l * t))?;
    Ok(UnitaryOperator::new_unchecked(m))
}

/// Phase-invariant gate fidelity |tr(U†V)|/d.
pub fn gate_fidelity<T: Real>(u: &UnitaryOperator<T>, v: &UnitaryOperator<T>) -> Result<T, LinalgError> {
    if u.dim() != v.dim() {
        return Err(LinalgError::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    let f = u.matrix().hs_inner(v.matrix()).norm() / T::lit(u.dim() as f64);
    Ok(f.min(T::one()))
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Negative rounding-level eigenvalues are clamped to zero.
pub fn matrix_sqrt_psd<T: Real>(h: &HermitianOperator<T>) -> Result<ComplexMatrix<T>, LinalgError> {
    hermitian_function(h, |l| Complex::new(l.max(T::zero()).sqrt(), T::zero()))
}

/// Uhlmann fidelity (tr √(√ρ σ √ρ))², which reduces to ⟨ψ|σ|ψ⟩ for pure ρ = |ψ⟩⟨ψ|.
///
/// Eigenvalues below 1e−13 of the largest are rounding noise and are dropped
/// before taking square roots.
pub fn uhlmann_fidelity<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T, LinalgError> {
    if rho.dim() != sigma.dim() {
        return Err(LinalgError::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let floor = T::tol(1e-13);
    let rho_eig = hermitian_eig(&rho.as_hermitian())?;
    let cut = floor * rho_eig.values.last().copied().unwrap_or(T::one());
    let sr = rho_eig.reassemble(|l| {
        Complex::new(if l > cut { l.sqrt() } else { T::zero() }, T::zero())
    });
    let inner = HermitianOperator::from_hermitian_part(&sr.matmul(sigma.matrix()).matmul(&sr));
    let values = hermitian_eig(&inner)?.values;
    let cut = floor * values.last().copied().unwrap_or(T::one()).max(T::zero());
    let root_trace: T = values
        .iter()
        .map(|&l| if l > cut { l.sqrt() } else { T::zero() })
        .sum();
    Ok((root_trace * root_trace).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::linalg::{pauli, random_density, random_hermitian, random_unitary};

    /// Independent oracle: truncated Taylor series of e^{−iht}.
    fn taylor_expm(h: &ComplexMatrix<f64>, t: f64, order: usize) -> ComplexMatrix<f64> {
        let n = h.rows();
        let x = h.scale(Complex::new(0.0, -t));
        let mut term = ComplexMatrix::identity(n);
        let mut acc = ComplexMatrix::identity(n);
        for k in 1..=order {
            term = term.matmul(&x).scale_real(1.0 / k as f64);
            acc = &acc + &term;
        }
        acc
    }

    /// Independent oracle: partial trace by summing over every full index pair.
    fn brute_trace(m: &ComplexMatrix<f64>) -> Complex<f64> {
        (0..m.rows()).map(|i| m[(i, i)]).sum()
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::<f64>::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let zz = kron(pauli::sz::<f64>().matrix(), pauli::sz::<f64>().matrix());
        let expected = ComplexMatrix::from_real(4, 4, &[
            1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        ])
        .unwrap();
        assert_eq!(zz, expected);
    }

    #[test]
    fn kron_mixed_product() {
        let a = random_unitary::<f64>(2, 1).into_matrix();
        let b = random_hermitian::<f64>(2, 2).into_matrix();
        let i2 = ComplexMatrix::identity(2);
        let lhs = kron(&a, &i2).matmul(&kron(&i2, &b));
        assert!(lhs.max_abs_diff(&kron(&a, &b)) < 1e-14);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho = random_density::<f64>(3, 5);
        let plus = DensityMatrix::<f64>::from_pure(&pauli::plus_one()).unwrap();
        let joint = kron(rho.matrix(), plus.matrix());
        let reduced = partial_trace(&joint, &[3, 2], &[0]).unwrap();
        assert!(reduced.max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let s = 0.5f64.sqrt();
        let bell = [Complex::new(s, 0.0), Complex::zero(), Complex::zero(), Complex::new(s, 0.0)];
        let proj = ComplexMatrix::outer(&bell, &bell);
        let reduced = partial_trace(&proj, &[2, 2], &[0]).unwrap();
        assert!(reduced.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        let reduced = partial_trace(&proj, &[2, 2], &[1]).unwrap();
        assert!(reduced.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let m = random_unitary::<f64>(8, 9).into_matrix();
        let total = brute_trace(&m);
        for keep in [vec![0], vec![1], vec![2], vec![0, 2], vec![]] {
            let r = partial_trace(&m, &[2, 2, 2], &keep).unwrap();
            assert!((r.trace() - total).norm() < 1e-12, "keep={keep:?}");
        }
    }

    #[test]
    fn partial_trace_middle_factor_matches_direct_sum() {
        let m = random_unitary::<f64>(12, 4).into_matrix();
        let dims = [2, 3, 2];
        let r = partial_trace(&m, &dims, &[1]).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let mut acc = Complex::zero();
                for i in 0..2 {
                    for k in 0..2 {
                        acc += m[(i * 6 + a * 2 + k, i * 6 + b * 2 + k)];
                    }
                }
                assert!((r[(a, b)] - acc).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn partial_trace_errors() {
        let m = ComplexMatrix::<f64>::identity(4);
        assert!(matches!(
            partial_trace(&m, &[2, 3], &[0]),
            Err(LinalgError::FactorMismatch { .. })
        ));
        assert!(matches!(
            partial_trace(&m, &[2, 2], &[2]),
            Err(LinalgError::FactorIndex { .. })
        ));
    }

    #[test]
    fn expm_special_cases() {
        let u = expm_unitary(&HermitianOperator::<f64>::zeros(3), 1.7).unwrap();
        assert!(u.matrix().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);

        let u = expm_unitary(&pauli::sx::<f64>(), std::f64::consts::FRAC_PI_2).unwrap();
        let expected = pauli::sx::<f64>().matrix().scale(Complex::new(0.0, -1.0));
        assert!(u.matrix().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn expm_matches_taylor_series() {
        let h = random_hermitian::<f64>(4, 21);
        let u = expm_unitary(&h, 0.3).unwrap();
        let oracle = taylor_expm(h.matrix(), 0.3, 12);
        assert!(u.matrix().max_abs_diff(&oracle) < 1e-10);
    }

    #[test]
    fn expm_single_precision() {
        let h = random_hermitian::<f32>(3, 2);
        let u = expm_unitary(&h, 0.5).unwrap();
        let oracle = taylor_expm(&h.matrix().cast(), 0.5, 20).cast::<f32>();
        assert!(u.matrix().max_abs_diff(&oracle) < 1e-4);
    }

    #[test]
    fn gate_fidelity_cases() {
        let u = random_unitary::<f64>(3, 8);
        assert!((gate_fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-14);
        let phased = UnitaryOperator::new(u.matrix().scale(Complex::from_polar(1.0, 0.83))).unwrap();
        assert!((gate_fidelity(&u, &phased).unwrap() - 1.0).abs() < 1e-14);
        let id = UnitaryOperator::<f64>::identity(2);
        let x = UnitaryOperator::new(pauli::sx::<f64>().into_matrix()).unwrap();
        assert!(gate_fidelity(&id, &x).unwrap().abs() < 1e-15);
        assert!(gate_fidelity(&id, &u).is_err());
    }

    #[test]
    fn uhlmann_reduces_to_overlap_for_pure_states() {
        let psi = crate::linalg::random_state_vector::<f64>(3, 4);
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let sigma = random_density::<f64>(3, 6);
        let overlap: f64 = {
            let s_psi = sigma.matrix().matvec(&psi);
            psi.iter().zip(&s_psi).map(|(a, b)| a.conj() * b).sum::<Complex<f64>>().re
        };
        let f = uhlmann_fidelity(&rho, &sigma).unwrap();
        assert!((f - overlap).abs() < 1e-9, "{f} vs {overlap}");
        assert!((uhlmann_fidelity(&sigma, &sigma).unwrap() - 1.0).abs() < 1e-9);
    }
}
