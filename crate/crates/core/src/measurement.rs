//! Measurements realized through the interface qubit.
//!
//! Preparing the interface in |+1⟩, evolving under e^{−iθ G⊗σx} and reading the
//! interface in the σz basis implements the two-outcome instrument with Hermitian
//! Kraus operators cos(θG) and sin(θG). This module provides the instrument in
//! closed form, an independent joint-evolution oracle for it, the channel obtained
//! by discarding the outcome, and a chain of two-outcome steps that realizes any
//! commuting Hermitian Kraus family.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    expm_unitary, hermitian_eig, kron, partial_trace, pauli, rng_from_seed, ComplexMatrix,
    DensityMatrix, HermitianEigen, HermitianOperator, LinalgError, SeededRng, VALIDITY_EPS,
};
use crate::scalar::Real;

/// Branches with probability below this are never sampled.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-12;
/// Eigenvalues of the remaining-weight operator below this are treated as zero.
pub const SUPPORT_CUTOFF: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("dimension mismatch: state is {state}, operator is {operator}")]
    DimensionMismatch { state: usize, operator: usize },
    #[error("Kraus operators are incomplete: ‖Σ A†A − I‖ = {residual:.3e}")]
    Incomplete { residual: f64 },
    #[error("Kraus set is empty")]
    EmptyKrausSet,
    #[error("unsupported Kraus set: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Label of a measurement outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
    Index(usize),
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Outcome::Plus => s.serialize_str("plus"),
            Outcome::Minus => s.serialize_str("minus"),
            Outcome::Index(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Label(String),
            Index(usize),
        }
        match Raw::deserialize(d)? {
            Raw::Label(l) if l == "plus" => Ok(Outcome::Plus),
            Raw::Label(l) if l == "minus" => Ok(Outcome::Minus),
            Raw::Label(l) => Err(serde::de::Error::custom(format!("unknown outcome {l:?}"))),
            Raw::Index(k) => Ok(Outcome::Index(k)),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct MeasurementRecord<T> {
    pub outcome: Outcome,
    pub probability: T,
    pub post_state: DensityMatrix<T>,
}

/// The two-outcome instrument {cos(θG), sin(θG)}.
#[derive(Clone, Debug)]
pub struct YesNoInstrument<T> {
    g: HermitianOperator<T>,
    theta: T,
    cos: ComplexMatrix<T>,
    sin: ComplexMatrix<T>,
}

impl<T: Real> YesNoInstrument<T> {
    /// `theta` is the dimensionless product of coupling strength and time.
    pub fn new(g: HermitianOperator<T>, theta: T) -> Result<Self, MeasurementError> {
        let eig = hermitian_eig(&g)?;
        let cos = eig.reassemble(|l| Complex::new((theta * l).cos(), T::zero()));
        let sin = eig.reassemble(|l| Complex::new((theta * l).sin(), T::zero()));
        Ok(Self { g, theta, cos, sin })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn g(&self) -> &HermitianOperator<T> {
        &self.g
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    /// cos(θG), the "plus" Kraus operator.
    pub fn kraus_plus(&self) -> &ComplexMatrix<T> {
        &self.cos
    }

    /// sin(θG), the "minus" Kraus operator.
    pub fn kraus_minus(&self) -> &ComplexMatrix<T> {
        &self.sin
    }

    /// ‖cos²(θG) + sin²(θG) − I‖_F.
    pub fn completeness_residual(&self) -> T {
        let sum = &self.cos.matmul(&self.cos) + &self.sin.matmul(&self.sin);
        sum.distance(&ComplexMatrix::identity(self.dim()))
    }

    fn check(&self, rho: &DensityMatrix<T>) -> Result<(), MeasurementError> {
        if rho.dim() != self.dim() {
            return Err(MeasurementError::DimensionMismatch {
                state: rho.dim(),
                operator: self.dim(),
            });
        }
        Ok(())
    }
}

/// K ρ K† (unnormalized).
fn sandwich<T: Real>(k: &ComplexMatrix<T>, rho: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    k.matmul(rho).matmul(&k.adjoint())
}

/// (p₊, p₋) = (tr cos(θG) ρ cos(θG), tr sin(θG) ρ sin(θG)).
pub fn yes_no_probabilities<T: Real>(
    rho: &DensityMatrix<T>,
    inst: &YesNoInstrument<T>,
) -> Result<(T, T), MeasurementError> {
    inst.check(rho)?;
    let p_plus = sandwich(&inst.cos, rho.matrix()).trace().re;
    let p_minus = sandwich(&inst.sin, rho.matrix()).trace().re;
    Ok((p_plus, p_minus))
}

/// Chooses between two branches, never picking one whose probability is below
/// [`MIN_BRANCH_PROBABILITY`].
fn choose_first<T: Real, R: Rng + ?Sized>(p_first: T, p_second: T, rng: &mut R) -> bool {
    let floor = T::lit(MIN_BRANCH_PROBABILITY);
    if p_first < floor {
        return false;
    }
    if p_second < floor {
        return true;
    }
    let u: f64 = rng.random();
    u * (p_first + p_second).as_f64() < p_first.as_f64()
}

/// Samples the instrument once with a caller-supplied generator.
pub fn yes_no_measure_with<T: Real, R: Rng + ?Sized>(
    rho: &DensityMatrix<T>,
    inst: &YesNoInstrument<T>,
    rng: &mut R,
) -> Result<MeasurementRecord<T>, MeasurementError> {
    let (p_plus, p_minus) = yes_no_probabilities(rho, inst)?;
    let (outcome, k, p) = if choose_first(p_plus, p_minus, rng) {
        (Outcome::Plus, &inst.cos, p_plus)
    } else {
        (Outcome::Minus, &inst.sin, p_minus)
    };
    Ok(MeasurementRecord {
        outcome,
        probability: p,
        post_state: DensityMatrix::from_unnormalized(&sandwich(k, rho.matrix())),
    })
}

/// Samples the instrument once; deterministic given `seed`.
pub fn yes_no_measure<T: Real>(
    rho: &DensityMatrix<T>,
    inst: &YesNoInstrument<T>,
    seed: u64,
) -> Result<MeasurementRecord<T>, MeasurementError> {
    yes_no_measure_with(rho, inst, &mut rng_from_seed(seed))
}

/// Branch data from simulating the interface explicitly.
#[derive(Clone, Debug)]
pub struct JointOutcome<T> {
    pub p_plus: T,
    pub p_minus: T,
    /// `None` when the branch has probability below [`MIN_BRANCH_PROBABILITY`].
    pub post_plus: Option<DensityMatrix<T>>,
    pub post_minus: Option<DensityMatrix<T>>,
}

/// Independent route to the instrument: evolve ρ ⊗ |+1⟩⟨+1| under e^{−iθ G⊗σx},
/// project the interface onto |±1⟩, and trace it out.
pub fn joint_oracle_measure<T: Real>(
    rho: &DensityMatrix<T>,
    inst: &YesNoInstrument<T>,
) -> Result<JointOutcome<T>, MeasurementError> {
    inst.check(rho)?;
    let d = rho.dim();
    let plus = ComplexMatrix::outer(&pauli::plus_one::<T>(), &pauli::plus_one());
    let minus = ComplexMatrix::outer(&pauli::minus_one::<T>(), &pauli::minus_one());
    let joint = kron(rho.matrix(), &plus);

    let generator = HermitianOperator::from_hermitian_part(&kron(inst.g.matrix(), pauli::sx::<T>().matrix()));
    let u = expm_unitary(&generator, inst.theta)?;
    let evolved = sandwich(u.matrix(), &joint);

    let id = ComplexMatrix::identity(d);
    let branch = |proj: &ComplexMatrix<T>| -> Result<(T, Option<DensityMatrix<T>>), MeasurementError> {
        let p_op = kron(&id, proj);
        let projected = p_op.matmul(&evolved).matmul(&p_op);
        let reduced = partial_trace(&projected, &[d, 2], &[0])?;
        let p = reduced.trace().re;
        let post = (p >= T::lit(MIN_BRANCH_PROBABILITY)).then(|| DensityMatrix::from_unnormalized(&reduced));
        Ok((p, post))
    };
    let (p_plus, post_plus) = branch(&plus)?;
    let (p_minus, post_minus) = branch(&minus)?;
    Ok(JointOutcome {
        p_plus,
        p_minus,
        post_plus,
        post_minus,
    })
}

/// Outcome-discarding channel cos(θG) ρ cos(θG) + sin(θG) ρ sin(θG).
pub fn yes_no_channel<T: Real>(
    rho: &DensityMatrix<T>,
    inst: &YesNoInstrument<T>,
) -> Result<DensityMatrix<T>, MeasurementError> {
    inst.check(rho)?;
    let out = &sandwich(&inst.cos, rho.matrix()) + &sandwich(&inst.sin, rho.matrix());
    Ok(DensityMatrix::new_unchecked(out.hermitian_part()))
}

/// A complete family of Kraus operators, Σ A_k†A_k = I.
#[derive(Clone, Debug)]
pub struct KrausSet<T> {
    operators: Vec<ComplexMatrix<T>>,
    commuting_hermitian: bool,
}

impl<T: Real> KrausSet<T> {
    /// Validates completeness to 1e−9 and records whether the family is Hermitian,
    /// positive semidefinite and pairwise commuting.
    pub fn new(operators: Vec<ComplexMatrix<T>>) -> Result<Self, MeasurementError> {
        let first = operators.first().ok_or(MeasurementError::EmptyKrausSet)?;
        let d = first.rows();
        for op in &operators {
            if !op.is_square() || op.rows() != d {
                return Err(MeasurementError::DimensionMismatch {
                    state: d,
                    operator: op.rows(),
                });
            }
        }
        let mut sum = ComplexMatrix::zeros(d, d);
        for op in &operators {
            sum = &sum + &op.adjoint().matmul(op);
        }
        let residual = sum.distance(&ComplexMatrix::identity(d));
        if residual > T::tol(VALIDITY_EPS) {
            return Err(MeasurementError::Incomplete {
                residual: residual.as_f64(),
            });
        }
        let commuting_hermitian = Self::is_commuting_psd(&operators);
        Ok(Self {
            operators,
            commuting_hermitian,
        })
    }

    fn is_commuting_psd(ops: &[ComplexMatrix<T>]) -> bool {
        let eps = T::tol(VALIDITY_EPS);
        for op in ops {
            let Ok(h) = HermitianOperator::new(op.clone()) else {
                return false;
            };
            match hermitian_eig(&h) {
                Ok(e) if e.values[0] >= -eps => {}
                _ => return false,
            }
        }
        ops.iter().enumerate().all(|(i, a)| {
            ops[i + 1..]
                .iter()
                .all(|b| a.commutator(b).frobenius_norm() <= eps)
        })
    }

    pub fn dim(&self) -> usize {
        self.operators[0].rows()
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[ComplexMatrix<T>] {
        &self.operators
    }

    pub fn commuting_hermitian(&self) -> bool {
        self.commuting_hermitian
    }

    /// tr(A_k† A_k ρ) for every k.
    pub fn probabilities(&self, rho: &DensityMatrix<T>) -> Result<Vec<T>, MeasurementError> {
        self.check(rho)?;
        Ok(self
            .operators
            .iter()
            .map(|a| sandwich(a, rho.matrix()).trace().re)
            .collect())
    }

    fn check(&self, rho: &DensityMatrix<T>) -> Result<(), MeasurementError> {
        if rho.dim() != self.dim() {
            return Err(MeasurementError::DimensionMismatch {
                state: rho.dim(),
                operator: self.dim(),
            });
        }
        Ok(())
    }
}

/// Σ_k A_k ρ A_k†.
pub fn apply_kraus_channel<T: Real>(
    rho: &DensityMatrix<T>,
    ks: &KrausSet<T>,
) -> Result<DensityMatrix<T>, MeasurementError> {
    ks.check(rho)?;
    let d = rho.dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for a in &ks.operators {
        out = &out + &sandwich(a, rho.matrix());
    }
    Ok(DensityMatrix::new_unchecked(out.hermitian_part()))
}

/// A commuting Hermitian Kraus family compiled into a chain of binary instruments.
///
/// In the shared eigenbasis every operator is diagonal, A_k = diag(a_k). Step k
/// (for k < m−1) is the two-outcome instrument with "yes" operator
/// B_k = a_k / √R_k and "no" operator √(1 − B_k²), where
/// R_k = 1 − Σ_{j<k} a_j² is the weight not yet claimed (entries of R_k below
/// [`SUPPORT_CUTOFF`] are outside its support and get B_k = 0). Surviving every
/// step yields the last outcome. The product of the "no" operators before step k
/// is √R_k, so the net Kraus operator for outcome k is exactly A_k.
#[derive(Clone, Debug)]
pub struct SequentialMeasurement<T> {
    basis: ComplexMatrix<T>,
    /// Diagonal of each A_k in the shared eigenbasis.
    diagonals: Vec<Vec<T>>,
    /// Diagonal yes/no step operators for steps 0..m−1.
    steps: Vec<(Vec<T>, Vec<T>)>,
}

impl<T: Real> SequentialMeasurement<T> {
    pub fn new(ks: &KrausSet<T>) -> Result<Self, MeasurementError> {
        if !ks.commuting_hermitian {
            return Err(MeasurementError::Unsupported(
                "sequential decomposition requires Hermitian, positive, pairwise-commuting Kraus operators"
                    .into(),
            ));
        }
        let d = ks.dim();
        let eig = shared_eigenbasis(ks)?;
        let v = eig.vectors.matrix();
        let vd = v.adjoint();
        let eps = T::tol(VALIDITY_EPS);

        let mut diagonals = Vec::with_capacity(ks.len());
        for a in &ks.operators {
            let rotated = vd.matmul(a).matmul(v);
            let diag: Vec<T> = (0..d).map(|i| rotated[(i, i)].re.max(T::zero())).collect();
            let off = rotated.distance(&ComplexMatrix::from_diag(
                &diag.iter().map(|&x| Complex::new(x, T::zero())).collect::<Vec<_>>(),
            ));
            if off > eps * T::one().max(a.frobenius_norm()) {
                return Err(MeasurementError::Unsupported(
                    "Kraus operators are not simultaneously diagonalizable".into(),
                ));
            }
            diagonals.push(diag);
        }

        let cutoff = T::lit(SUPPORT_CUTOFF);
        let mut remaining = vec![T::one(); d];
        let mut steps = Vec::with_capacity(ks.len().saturating_sub(1));
        for diag in diagonals.iter().take(ks.len() - 1) {
            let mut yes = vec![T::zero(); d];
            let mut no = vec![T::one(); d];
            for i in 0..d {
                if remaining[i] > cutoff {
                    let b = (diag[i] / remaining[i].sqrt()).min(T::one());
                    yes[i] = b;
                    no[i] = (T::one() - b * b).max(T::zero()).sqrt();
                }
                remaining[i] = (remaining[i] - diag[i] * diag[i]).max(T::zero());
            }
            steps.push((yes, no));
        }
        Ok(Self {
            basis: v.clone(),
            diagonals,
            steps,
        })
    }

    pub fn outcomes(&self) -> usize {
        self.diagonals.len()
    }

    fn lift(&self, diag: &[T]) -> ComplexMatrix<T> {
        let dm = ComplexMatrix::from_diag(&diag.iter().map(|&x| Complex::new(x, T::zero())).collect::<Vec<_>>());
        self.basis.matmul(&dm).matmul(&self.basis.adjoint())
    }

    /// Net Kraus operator of outcome k, reconstructed from the step chain.
    pub fn effective_operator(&self, k: usize) -> ComplexMatrix<T> {
        let d = self.basis.rows();
        let mut diag = vec![T::one(); d];
        for (_, no) in self.steps.iter().take(k) {
            for i in 0..d {
                diag[i] *= no[i];
            }
        }
        if let Some((yes, _)) = self.steps.get(k) {
            for i in 0..d {
                diag[i] *= yes[i];
            }
        }
        self.lift(&diag)
    }

    /// Runs the chain once on `rho`.
    pub fn measure_with<R: Rng + ?Sized>(
        &self,
        rho: &DensityMatrix<T>,
        rng: &mut R,
    ) -> Result<MeasurementRecord<T>, MeasurementError> {
        if rho.dim() != self.basis.rows() {
            return Err(MeasurementError::DimensionMismatch {
                state: rho.dim(),
                operator: self.basis.rows(),
            });
        }
        let mut state = rho.matrix().clone();
        let mut probability = T::one();
        for (k, (yes, no)) in self.steps.iter().enumerate() {
            let y = self.lift(yes);
            let n = self.lift(no);
            let yes_branch = sandwich(&y, &state);
            let no_branch = sandwich(&n, &state);
            let p_yes = yes_branch.trace().re;
            let p_no = no_branch.trace().re;
            if choose_first(p_yes, p_no, rng) {
                return Ok(MeasurementRecord {
                    outcome: Outcome::Index(k),
                    probability: probability * p_yes,
                    post_state: DensityMatrix::from_unnormalized(&yes_branch),
                });
            }
            probability *= p_no;
            state = no_branch.scale_real(T::one() / p_no);
        }
        Ok(MeasurementRecord {
            outcome: Outcome::Index(self.steps.len()),
            probability,
            post_state: DensityMatrix::from_unnormalized(&state),
        })
    }
}

/// Eigenbasis of a generic real combination of the (commuting) operators.
fn shared_eigenbasis<T: Real>(ks: &KrausSet<T>) -> Result<HermitianEigen<T>, MeasurementError> {
    let d = ks.dim();
    let mut combo = ComplexMatrix::zeros(d, d);
    // Weights 1, φ⁻¹, φ⁻², ... avoid accidental degeneracies of the combination.
    let phi_inv = T::lit(0.618_033_988_749_894_8);
    let mut w = T::one();
    for a in &ks.operators {
        combo.axpy(Complex::new(w, T::zero()), a);
        w *= phi_inv;
    }
    Ok(hermitian_eig(&HermitianOperator::from_hermitian_part(&combo))?)
}

/// Realizes the generalized measurement {A_k} as a chain of two-outcome steps.
pub fn sequential_generalized_measure<T: Real>(
    rho: &DensityMatrix<T>,
    ks: &KrausSet<T>,
    seed: u64,
) -> Result<MeasurementRecord<T>, MeasurementError> {
    let chain = SequentialMeasurement::new(ks)?;
    let mut rng: SeededRng = rng_from_seed(seed);
    chain.measure_with(rho, &mut rng)
}
