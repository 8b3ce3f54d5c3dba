//! State-vector operations on a multi-factor space (row-major, last factor fastest).

use num_complex::Complex;

use super::Mat;

type C64 = Complex<f64>;

#[derive(Clone, Debug)]
pub(crate) struct Layout {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Layout {
    pub(crate) fn new(dims: Vec<usize>) -> Self {
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        Self { dims, strides }
    }

    /// Offsets of every basis state of `factors`, in kron order of those factors.
    fn offsets(&self, factors: &[usize]) -> Vec<usize> {
        factors.iter().fold(vec![0], |acc, &f| {
            acc.iter()
                .flat_map(|&base| (0..self.dims[f]).map(move |i| base + i * self.strides[f]))
                .collect()
        })
    }

    /// Applies `op` (acting on `targets` in the given order) to the components of
    /// `state` whose factors listed in `condition` hold the given basis values.
    pub(crate) fn apply(&self, state: &mut [C64], targets: &[usize], op: &Mat, condition: &[(usize, usize)]) {
        let inner = self.offsets(targets);
        debug_assert_eq!(inner.len(), op.rows());
        let rest: Vec<usize> = (0..self.dims.len())
            .filter(|f| !targets.contains(f) && !condition.iter().any(|(c, _)| c == f))
            .collect();
        let base = condition.iter().map(|&(f, v)| v * self.strides[f]).sum::<usize>();
        let mut gathered = vec![C64::new(0.0, 0.0); inner.len()];
        for outer in self.offsets(&rest) {
            let start = base + outer;
            for (g, &o) in gathered.iter_mut().zip(&inner) {
                *g = state[start + o];
            }
            let out = op.matvec(&gathered);
            for (v, &o) in out.into_iter().zip(&inner) {
                state[start + o] = v;
            }
        }
    }

    /// Reduced density matrix of a pure `state` on `factor`.
    pub(crate) fn reduced(&self, state: &[C64], factor: usize) -> Mat {
        let d = self.dims[factor];
        let rest: Vec<usize> = (0..self.dims.len()).filter(|&f| f != factor).collect();
        let rest_offsets = self.offsets(&rest);
        Mat::from_fn(d, d, |a, b| {
            rest_offsets
                .iter()
                .map(|&o| state[o + a * self.strides[factor]] * state[o + b * self.strides[factor]].conj())
                .sum()
        })
    }

    /// Probability that `factor` is found in basis state `value`.
    pub(crate) fn probability(&self, state: &[C64], factor: usize, value: usize) -> f64 {
        let rest: Vec<usize> = (0..self.dims.len()).filter(|&f| f != factor).collect();
        let base = value * self.strides[factor];
        self.offsets(&rest).iter().map(|&o| state[base + o].norm_sqr()).sum()
    }

    /// Projects `factor` onto `value` and renormalizes.
    pub(crate) fn collapse(&self, state: &mut [C64], factor: usize, value: usize) {
        let rest: Vec<usize> = (0..self.dims.len()).filter(|&f| f != factor).collect();
        let rest_offsets = self.offsets(&rest);
        let p = self.probability(state, factor, value);
        let scale = 1.0 / p.sqrt();
        for v in 0..self.dims[factor] {
            for &o in &rest_offsets {
                let idx = o + v * self.strides[factor];
                state[idx] = if v == value { state[idx] * scale } else { C64::new(0.0, 0.0) };
            }
        }
    }

    /// Kron product of per-factor vectors.
    pub(crate) fn product_state(&self, factors: &[Vec<C64>]) -> Vec<C64> {
        factors
            .iter()
            .fold(vec![C64::new(1.0, 0.0)], |acc, v| crate::linalg::kron_vec(&acc, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, kron_all, random_state_vector, random_unitary};

    #[test]
    fn local_application_matches_kron() {
        let layout = Layout::new(vec![2, 3, 2]);
        let psi = random_state_vector::<f64>(12, 1);
        let u = random_unitary::<f64>(4, 2).into_matrix();
        // u on factors (2, 0), i.e. ordered last-then-first.
        let mut got = psi.clone();
        layout.apply(&mut got, &[2, 0], &u, &[]);
        // Oracle: reorder factors to (2, 0, 1), apply u⊗I, reorder back.
        let perm = |i0: usize, i1: usize, i2: usize| i0 * 6 + i1 * 2 + i2;
        let mut expected = vec![C64::new(0.0, 0.0); 12];
        let full = kron(&u, &Mat::identity(3));
        for r in 0..12 {
            let (r2, r0, r1) = (r / 6, (r / 3) % 2, r % 3);
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..12 {
                let (c2, c0, c1) = (c / 6, (c / 3) % 2, c % 3);
                acc += full[(r, c)] * psi[perm(c0, c1, c2)];
            }
            expected[perm(r0, r1, r2)] = acc;
        }
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn conditioned_application() {
        let layout = Layout::new(vec![2, 2]);
        let x = crate::linalg::pauli::sx::<f64>().into_matrix();
        let mut psi = vec![C64::new(0.5, 0.0); 4];
        psi[3] = C64::new(-0.5, 0.0);
        let p0 = crate::linalg::DensityMatrix::<f64>::basis_state(2, 0).into_matrix();
        let p1 = crate::linalg::DensityMatrix::<f64>::basis_state(2, 1).into_matrix();
        let cnot = &kron_all(&[p0, Mat::identity(2)]) + &kron(&p1, &x);
        let expected = cnot.matvec(&psi);
        layout.apply(&mut psi, &[1], &x, &[(0, 1)]);
        assert_eq!(psi, expected);
    }

    #[test]
    fn reduced_and_collapse() {
        let layout = Layout::new(vec![2, 3]);
        let a = random_state_vector::<f64>(2, 3);
        let b = random_state_vector::<f64>(3, 4);
        let psi = layout.product_state(&[a.clone(), b]);
        let rho = layout.reduced(&psi, 0);
        let expected = Mat::outer(&a, &a);
        assert!(rho.max_abs_diff(&expected) < 1e-14);
        assert!((layout.probability(&psi, 0, 1) - a[1].norm_sqr()).abs() < 1e-14);
        let mut c = psi.clone();
        layout.collapse(&mut c, 0, 1);
        assert!((layout.probability(&c, 0, 1) - 1.0).abs() < 1e-14);
    }
}
