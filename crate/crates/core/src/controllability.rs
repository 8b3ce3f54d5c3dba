//! Dynamical Lie algebra closure and controllability verdicts.
//!
//! Generators are kept Hermitian and closed under the bracket `i[X, Y]`, which maps
//! Hermitian pairs to Hermitian matrices and spans the same real algebra as the
//! anti-Hermitian formulation. Controllability is judged on the traceless part:
//! the system plus interface is controllable when the closure contains su(D).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{kron, kron_all, pauli, ComplexMatrix, HermitianOperator, LinalgError};
use crate::scalar::Real;

/// Default relative rank threshold for Gram–Schmidt.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default cap on breadth-first commutator depth.
pub const DEFAULT_MAX_DEPTH: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("generator set is empty")]
    EmptyGenerators,
    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A system `S` of dimension `d` with Hamiltonian `H`, coupled to the interface
/// qubit through `A ⊗ σz`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct InterfaceSystem<T> {
    h: HermitianOperator<T>,
    a: HermitianOperator<T>,
}

impl<T: Real> InterfaceSystem<T> {
    pub fn new(h: HermitianOperator<T>, a: HermitianOperator<T>) -> Result<Self, ControlError> {
        if h.dim() != a.dim() {
            return Err(ControlError::DimensionMismatch {
                what: "A".into(),
                expected: h.dim(),
                found: a.dim(),
            });
        }
        Ok(Self { h, a })
    }

    /// System dimension `d`.
    pub fn d(&self) -> usize {
        self.h.dim()
    }

    /// Dimension of system ⊗ interface, `2d`.
    pub fn joint_dim(&self) -> usize {
        2 * self.d()
    }

    pub fn h(&self) -> &HermitianOperator<T> {
        &self.h
    }

    pub fn a(&self) -> &HermitianOperator<T> {
        &self.a
    }

    /// The always-on generator `H ⊗ I + A ⊗ σz` on `S ⊗ Q`.
    pub fn drift(&self) -> HermitianOperator<T> {
        let i2 = ComplexMatrix::identity(2);
        let m = &kron(self.h.matrix(), &i2) + &kron(self.a.matrix(), pauli::sz::<T>().matrix());
        HermitianOperator::from_hermitian_part(&m)
    }

    /// `I ⊗ σx`, `I ⊗ σy`, `I ⊗ σz`.
    pub fn interface_controls(&self) -> [HermitianOperator<T>; 3] {
        let id = ComplexMatrix::identity(self.d());
        [pauli::sx::<T>(), pauli::sy(), pauli::sz()]
            .map(|s| HermitianOperator::from_hermitian_part(&kron(&id, s.matrix())))
    }

    /// Drift plus the three interface Paulis.
    pub fn generators(&self) -> GeneratorSet<T> {
        let [x, y, z] = self.interface_controls();
        GeneratorSet::new(vec![
            ("H⊗I + A⊗σz".into(), self.drift()),
            ("I⊗σx".into(), x),
            ("I⊗σy".into(), y),
            ("I⊗σz".into(), z),
        ])
        .expect("interface generators share a dimension")
    }
}

/// Two systems sharing one interface qubit, ordered `S ⊗ Q ⊗ S′`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct BridgeSystem<T> {
    pub left: InterfaceSystem<T>,
    pub right: InterfaceSystem<T>,
}

impl<T: Real> BridgeSystem<T> {
    pub fn new(left: InterfaceSystem<T>, right: InterfaceSystem<T>) -> Self {
        Self { left, right }
    }

    pub fn joint_dim(&self) -> usize {
        self.left.d() * 2 * self.right.d()
    }

    /// `H⊗I⊗I + A⊗σz⊗I + I⊗I⊗H′ + I⊗σz⊗A′`.
    pub fn drift(&self) -> HermitianOperator<T> {
        let il = ComplexMatrix::identity(self.left.d());
        let ir = ComplexMatrix::identity(self.right.d());
        let i2 = ComplexMatrix::identity(2);
        let sz = pauli::sz::<T>().into_matrix();
        let terms = [
            kron_all([self.left.h.matrix(), &i2, &ir]),
            kron_all([self.left.a.matrix(), &sz, &ir]),
            kron_all([&il, &i2, self.right.h.matrix()]),
            kron_all([&il, &sz, self.right.a.matrix()]),
        ];
        let sum = terms[1..].iter().fold(terms[0].clone(), |acc, t| &acc + t);
        HermitianOperator::from_hermitian_part(&sum)
    }

    pub fn generators(&self) -> GeneratorSet<T> {
        let il = ComplexMatrix::identity(self.left.d());
        let ir = ComplexMatrix::identity(self.right.d());
        let lift = |s: HermitianOperator<T>| {
            HermitianOperator::from_hermitian_part(&kron_all([&il, s.matrix(), &ir]))
        };
        GeneratorSet::new(vec![
            ("H⊗I⊗I + A⊗σz⊗I + I⊗I⊗H′ + I⊗σz⊗A′".into(), self.drift()),
            ("I⊗σx⊗I".into(), lift(pauli::sx())),
            ("I⊗σy⊗I".into(), lift(pauli::sy())),
            ("I⊗σz⊗I".into(), lift(pauli::sz())),
        ])
        .expect("bridge generators share a dimension")
    }
}

/// Labelled Hermitian generators of a common dimension.
#[derive(Clone, Debug)]
pub struct GeneratorSet<T> {
    dim: usize,
    generators: Vec<(String, HermitianOperator<T>)>,
}

impl<T: Real> GeneratorSet<T> {
    pub fn new(generators: Vec<(String, HermitianOperator<T>)>) -> Result<Self, ControlError> {
        let dim = generators
            .first()
            .ok_or(ControlError::EmptyGenerators)?
            .1
            .dim();
        for (label, g) in &generators {
            if g.dim() != dim {
                return Err(ControlError::DimensionMismatch {
                    what: label.clone(),
                    expected: dim,
                    found: g.dim(),
                });
            }
        }
        Ok(Self { dim, generators })
    }

    /// Unlabelled convenience constructor.
    pub fn from_operators(ops: Vec<HermitianOperator<T>>) -> Result<Self, ControlError> {
        Self::new(
            ops.into_iter()
                .enumerate()
                .map(|(i, g)| (format!("g{i}"), g))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &HermitianOperator<T>)> {
        self.generators.iter().map(|(l, g)| (l.as_str(), g))
    }

    pub fn push(&mut self, label: impl Into<String>, g: HermitianOperator<T>) -> Result<(), ControlError> {
        if g.dim() != self.dim {
            return Err(ControlError::DimensionMismatch {
                what: label.into(),
                expected: self.dim,
                found: g.dim(),
            });
        }
        self.generators.push((label.into(), g));
        Ok(())
    }
}

/// Orthonormal (Hilbert–Schmidt) basis of a generated algebra.
#[derive(Clone, Debug)]
pub struct LieAlgebraBasis<T> {
    pub dim: usize,
    pub basis: Vec<HermitianOperator<T>>,
    pub depth_reached: usize,
    /// False only when the depth cap stopped the closure with work still pending.
    pub saturated: bool,
}

impl<T: Real> LieAlgebraBasis<T> {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Dimension of the span after removing the identity component of every element.
    pub fn traceless_dim(&self, tol: f64) -> usize {
        let d = T::lit(self.dim as f64);
        let mut ortho = Vec::new();
        for b in &self.basis {
            let shift = b.matrix().trace().re / d;
            let traceless = b.sub(&HermitianOperator::identity(self.dim).scale(shift));
            if let Some(v) = orthonormal_remainder(&traceless, &ortho, T::tol(tol), T::zero()) {
                ortho.push(v);
            }
        }
        ortho.len()
    }

    /// Largest norm of the component of `x` outside the span.
    pub fn residual_outside(&self, x: &HermitianOperator<T>) -> T {
        residual(x, &self.basis).norm()
    }

    /// max_{i,j} ‖i[b_i, b_j] − proj(i[b_i, b_j])‖, a closure certificate.
    pub fn closure_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.basis.len() {
            for j in (i + 1)..self.basis.len() {
                let c = bracket(&self.basis[i], &self.basis[j]);
                worst = worst.max(self.residual_outside(&c));
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllabilityReport {
    pub algebra_dim: usize,
    pub traceless_dim: usize,
    /// D² − 1.
    pub required_dim: usize,
    pub controllable: bool,
    pub depth_reached: usize,
    pub saturated: bool,
    /// Closure hit the depth cap before saturating and the algebra was not yet full.
    pub inconclusive: bool,
}

/// Options shared by the closure-based verdicts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosureOptions {
    pub tol: f64,
    pub max_depth: usize,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// `i[x, y]` without dimension checks.
fn bracket<T: Real>(x: &HermitianOperator<T>, y: &HermitianOperator<T>) -> HermitianOperator<T> {
    let c = x.matrix().commutator(y.matrix());
    HermitianOperator::from_hermitian_part(&c.scale(num_complex::Complex::new(T::zero(), T::one())))
}

/// `i[x, y] = i(xy − yx)`, Hermitian whenever `x` and `y` are.
pub fn commutator<T: Real>(
    x: &HermitianOperator<T>,
    y: &HermitianOperator<T>,
) -> Result<HermitianOperator<T>, ControlError> {
    if x.dim() != y.dim() {
        return Err(ControlError::DimensionMismatch {
            what: "commutator operand".into(),
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let c = x.matrix().commutator(y.matrix());
    // Hermitian by algebra; kept unsymmetrized so the residual reflects rounding.
    Ok(HermitianOperator::new(c.scale(num_complex::Complex::new(T::zero(), T::one())))?)
}

/// Two passes of modified Gram–Schmidt against an orthonormal set.
fn residual<T: Real>(x: &HermitianOperator<T>, basis: &[HermitianOperator<T>]) -> HermitianOperator<T> {
    let mut r = x.clone();
    for _ in 0..2 {
        for b in basis {
            let p = b.inner(&r);
            r = r.sub(&b.scale(p));
        }
    }
    r
}

/// Normalized remainder of `x` outside `basis`, or `None` when it is within
/// `rel_tol·‖x‖` of the span or `‖x‖ ≤ abs_floor`.
fn orthonormal_remainder<T: Real>(
    x: &HermitianOperator<T>,
    basis: &[HermitianOperator<T>],
    rel_tol: T,
    abs_floor: T,
) -> Option<HermitianOperator<T>> {
    let norm = x.norm();
    if norm <= abs_floor || norm == T::zero() {
        return None;
    }
    let r = residual(x, basis);
    let rn = r.norm();
    if rn <= rel_tol * norm {
        None
    } else {
        Some(r.scale(T::one() / rn))
    }
}

/// Breadth-first commutator closure of a generator set.
///
/// The generators are orthonormalized first. Each layer brackets the elements
/// added in the previous layer with the whole basis and keeps whatever survives
/// projection. Closure stops when a layer adds nothing, the basis reaches D², or
/// `max_depth` layers have run (in which case `saturated` is false).
///
/// Brackets of two unit-norm basis elements whose norm is below `tol` are treated
/// as zero; without that floor, rounding noise from commuting pairs would be
/// normalized up into spurious directions.
pub fn generate_dla<T: Real>(
    gens: &GeneratorSet<T>,
    tol: f64,
    max_depth: usize,
) -> Result<LieAlgebraBasis<T>, ControlError> {
    if gens.is_empty() {
        return Err(ControlError::EmptyGenerators);
    }
    let dim = gens.dim();
    let full = dim * dim;
    let tol_t = T::tol(tol);

    let mut basis: Vec<HermitianOperator<T>> = Vec::new();
    for (_, g) in gens.iter() {
        if let Some(b) = orthonormal_remainder(g, &basis, tol_t, T::zero()) {
            basis.push(b);
        }
    }

    let mut frontier: Vec<usize> = (0..basis.len()).collect();
    let mut depth = 0;
    let mut saturated = true;
    while !frontier.is_empty() && basis.len() < full {
        if depth == max_depth {
            saturated = false;
            break;
        }
        depth += 1;
        let layer_len = basis.len();
        let in_frontier = |j: usize| frontier.contains(&j);
        let mut next = Vec::new();
        'layer: for &i in &frontier {
            for j in 0..layer_len {
                if in_frontier(j) && j >= i {
                    continue;
                }
                let c = bracket(&basis[i], &basis[j]);
                if let Some(b) = orthonormal_remainder(&c, &basis, tol_t, tol_t) {
                    next.push(basis.len());
                    basis.push(b);
                    if basis.len() == full {
                        break 'layer;
                    }
                }
            }
        }
        frontier = next;
    }

    Ok(LieAlgebraBasis {
        dim,
        basis,
        depth_reached: depth,
        saturated,
    })
}

fn verdict<T: Real>(gens: &GeneratorSet<T>, opts: ClosureOptions) -> Result<ControllabilityReport, ControlError> {
    let algebra = generate_dla(gens, opts.tol, opts.max_depth)?;
    let traceless_dim = algebra.traceless_dim(opts.tol);
    let required_dim = gens.dim() * gens.dim() - 1;
    let controllable = traceless_dim == required_dim;
    Ok(ControllabilityReport {
        algebra_dim: algebra.len(),
        traceless_dim,
        required_dim,
        controllable,
        depth_reached: algebra.depth_reached,
        saturated: algebra.saturated,
        inconclusive: !controllable && !algebra.saturated,
    })
}

/// Decides whether `{H⊗I + A⊗σz, I⊗σx, I⊗σy, I⊗σz}` generates su(2d).
pub fn is_controllable<T: Real>(
    sys: &InterfaceSystem<T>,
    opts: ClosureOptions,
) -> Result<ControllabilityReport, ControlError> {
    verdict(&sys.generators(), opts)
}

/// Same verdict for two systems bridged by a single interface qubit.
pub fn is_bridge_controllable<T: Real>(
    bridge: &BridgeSystem<T>,
    opts: ClosureOptions,
) -> Result<ControllabilityReport, ControlError> {
    verdict(&bridge.generators(), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_hermitian;

    fn sys(h: HermitianOperator<f64>, a: HermitianOperator<f64>) -> InterfaceSystem<f64> {
        InterfaceSystem::new(h, a).unwrap()
    }

    #[test]
    fn commutator_of_paulis() {
        let x = pauli::sx::<f64>();
        let y = pauli::sy::<f64>();
        let z = pauli::sz::<f64>();
        assert!(commutator(&x, &x).unwrap().norm() < 1e-15);
        let c = commutator(&x, &y).unwrap();
        assert!(c.matrix().max_abs_diff(&z.scale(-2.0).into_matrix()) < 1e-15);
        assert!(commutator(&x, &HermitianOperator::identity(3)).is_err());
    }

    #[test]
    fn commutator_output_is_hermitian() {
        for seed in 0..10 {
            let x = random_hermitian::<f64>(5, seed);
            let y = random_hermitian::<f64>(5, seed + 100);
            let c = commutator(&x, &y).unwrap();
            assert!(c.matrix().hermiticity_residual() <= 1e-12);
        }
    }

    #[test]
    fn abelian_and_su2() {
        let g = GeneratorSet::from_operators(vec![pauli::sz::<f64>()]).unwrap();
        assert_eq!(generate_dla(&g, DEFAULT_TOL, 12).unwrap().len(), 1);

        let g = GeneratorSet::from_operators(vec![pauli::sx::<f64>(), pauli::sz()]).unwrap();
        let alg = generate_dla(&g, DEFAULT_TOL, 12).unwrap();
        assert_eq!(alg.len(), 3);
        assert!(alg.saturated);
        // σy is in the span.
        assert!(alg.residual_outside(&pauli::sy()) < 1e-12);
    }

    #[test]
    fn empty_generators_rejected() {
        assert_eq!(
            GeneratorSet::<f64>::from_operators(vec![]).unwrap_err(),
            ControlError::EmptyGenerators
        );
    }

    // Expected dimensions below were frozen from an independent SVD-rank closure
    // (numpy), not from this implementation.

    #[test]
    fn generic_pair_is_controllable() {
        let r = is_controllable(&sys(pauli::sx(), pauli::sx().add(&pauli::sz())), ClosureOptions::default()).unwrap();
        assert_eq!(r.traceless_dim, 15);
        assert_eq!(r.algebra_dim, 15);
        assert!(r.controllable && r.saturated && !r.inconclusive);
    }

    #[test]
    fn sigma_x_sigma_z_pair_has_hidden_symmetry() {
        // H = σx, A = σz closes on a 10-dimensional subalgebra of su(4).
        let r = is_controllable(&sys(pauli::sx(), pauli::sz()), ClosureOptions::default()).unwrap();
        assert_eq!(r.traceless_dim, 10);
        assert!(!r.controllable && r.saturated);
    }

    #[test]
    fn symmetric_pair_is_not_controllable() {
        let r = is_controllable(&sys(pauli::sz(), pauli::sz()), ClosureOptions::default()).unwrap();
        assert_eq!(r.traceless_dim, 7);
        assert!(!r.controllable && !r.inconclusive);
    }

    #[test]
    fn decoupled_qubit_only() {
        let r = is_controllable(
            &sys(HermitianOperator::zeros(2), HermitianOperator::zeros(2)),
            ClosureOptions::default(),
        )
        .unwrap();
        assert_eq!(r.traceless_dim, 3);
        assert!(!r.controllable);
    }

    #[test]
    fn depth_cap_reports_inconclusive() {
        let r = is_controllable(
            &sys(pauli::sx(), pauli::sx().add(&pauli::sz())),
            ClosureOptions {
                tol: DEFAULT_TOL,
                max_depth: 1,
            },
        )
        .unwrap();
        assert!(!r.saturated);
        assert!(!r.controllable);
        assert!(r.inconclusive);
    }

    #[test]
    fn single_precision_closure() {
        let s = InterfaceSystem::<f32>::new(pauli::sx(), pauli::sx().add(&pauli::sz())).unwrap();
        let r = is_controllable(&s, ClosureOptions { tol: 1e-3, max_depth: 12 }).unwrap();
        assert_eq!(r.traceless_dim, 15);
    }

    #[test]
    fn bridge_verdicts() {
        let left = sys(pauli::sx(), pauli::sx().add(&pauli::sz()));
        let right = sys(pauli::sy(), pauli::sx().add(&pauli::sz()));
        let r = is_bridge_controllable(&BridgeSystem::new(left.clone(), right), ClosureOptions::default()).unwrap();
        assert_eq!(r.traceless_dim, 63);
        assert!(r.controllable);

        // Identical sides are related by the S ↔ S′ exchange symmetry.
        let r = is_bridge_controllable(&BridgeSystem::new(left.clone(), left), ClosureOptions::default()).unwrap();
        assert_eq!(r.traceless_dim, 38);
        assert!(!r.controllable);

        // Left side (σx, σz) is itself symmetric, and the bridge inherits it.
        let r = is_bridge_controllable(
            &BridgeSystem::new(sys(pauli::sx(), pauli::sz()), sys(pauli::sy(), pauli::sx().add(&pauli::sz()))),
            ClosureOptions::default(),
        )
        .unwrap();
        assert_eq!(r.traceless_dim, 36);

        let zero = || HermitianOperator::<f64>::zeros(2);
        let decoupled = BridgeSystem::new(sys(pauli::sx(), zero()), sys(pauli::sy(), zero()));
        assert!(!is_bridge_controllable(&decoupled, ClosureOptions::default()).unwrap().controllable);
    }

    #[test]
    fn trivial_right_side_reduces_to_single_system() {
        let scalar = |x: f64| HermitianOperator::<f64>::from_real_diag(&[x]);
        for (h, a) in [
            (pauli::sx::<f64>(), pauli::sz::<f64>()),
            (pauli::sx(), pauli::sx().add(&pauli::sz())),
            (pauli::sz(), pauli::sz()),
            (HermitianOperator::zeros(2), HermitianOperator::zeros(2)),
        ] {
            let left = sys(h, a);
            let single = is_controllable(&left, ClosureOptions::default()).unwrap();
            let bridge = BridgeSystem::new(left, sys(scalar(0.7), scalar(-0.4)));
            let bridged = is_bridge_controllable(&bridge, ClosureOptions::default()).unwrap();
            assert_eq!(single.controllable, bridged.controllable);
            assert_eq!(single.traceless_dim, bridged.traceless_dim);
        }
    }
}
