//! Networks of subsystems joined by interface qubits.
//!
//! Factor order of the full Hilbert space is fixed: all subsystems in index order,
//! then one qubit per link in link order. Interface basis index 0 is |+1⟩ and
//! index 1 is |−1⟩ (σz eigenvalues).

mod exec;
mod routing;
mod tensor;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    expm_unitary, kron_all, pauli, rng_from_seed, sample_state_vector, ComplexMatrix, HermitianOperator,
    LinalgError,
};
use crate::measurement::MeasurementError;
use crate::synthesis::SynthesisError;

pub use exec::{
    pairwise_unitary, run_circuit, run_circuit_with, state_transfer, state_transfer_with, PairwiseMode,
    PairwiseRealizer, PairwiseResult, PairwiseSummary, ProductState, RunResult, TransferResult,
};
pub use routing::{compile_circuit, route, CircuitGate, CompilationReport, ScheduleEntry, Topology};

type Mat = ComplexMatrix<f64>;
type C64 = Complex<f64>;

/// Largest full-network Hilbert dimension accepted.
pub const MAX_TOTAL_DIM: usize = 4096;
/// Product states sampled by [`verify_decoupling`].
pub const DECOUPLING_SAMPLES: usize = 10;
/// Seed of the product-state sample used by [`verify_decoupling`].
pub const DECOUPLING_SEED: u64 = 0x5eed;
/// Pairwise syntheses scoring below this abort circuit execution.
pub const MIN_PAIRWISE_FIDELITY: f64 = 0.99;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("{what} index {index} out of range (count {count})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        count: usize,
    },
    #[error("total dimension {dim} exceeds cap {MAX_TOTAL_DIM}")]
    DimensionCap { dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid gate {index}: {reason}")]
    InvalidGate { index: usize, reason: String },
    #[error("pairwise synthesis on link {link} reached only {fidelity:.6} (need {MIN_PAIRWISE_FIDELITY})")]
    SynthesisFailed { link: usize, fidelity: f64 },
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsystemSpec {
    pub hamiltonian: HermitianOperator<f64>,
}

impl SubsystemSpec {
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }
}

/// Interface qubit between subsystems `endpoints[0]` and `endpoints[1]`, coupled
/// through `coupling[0]⊗σz` and `coupling[1]⊗σz`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfaceLink {
    pub endpoints: [usize; 2],
    pub coupling: [HermitianOperator<f64>; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct NetworkSpec {
    subsystems: Vec<SubsystemSpec>,
    links: Vec<InterfaceLink>,
    topology: Topology,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawNetwork {
    subsystems: Vec<SubsystemSpec>,
    links: Vec<InterfaceLink>,
}

impl TryFrom<RawNetwork> for NetworkSpec {
    type Error = NetworkError;

    fn try_from(raw: RawNetwork) -> Result<Self, NetworkError> {
        NetworkSpec::new(raw.subsystems, raw.links)
    }
}

impl From<NetworkSpec> for RawNetwork {
    fn from(net: NetworkSpec) -> Self {
        RawNetwork {
            subsystems: net.subsystems,
            links: net.links,
        }
    }
}

impl NetworkSpec {
    pub fn new(subsystems: Vec<SubsystemSpec>, links: Vec<InterfaceLink>) -> Result<Self, NetworkError> {
        let dims: Vec<usize> = subsystems.iter().map(SubsystemSpec::dim).collect();
        let topology = Topology::new(dims.clone(), links.iter().map(|l| l.endpoints).collect())?;
        for (i, link) in links.iter().enumerate() {
            for side in 0..2 {
                let expected = dims[link.endpoints[side]];
                let found = link.coupling[side].dim();
                if found != expected {
                    return Err(NetworkError::InvalidNetwork(format!(
                        "link {i} coupling {side} is {found}-dimensional, subsystem {} is {expected}-dimensional",
                        link.endpoints[side]
                    )));
                }
            }
        }
        let dim = dims
            .iter()
            .chain(std::iter::repeat_n(&2, links.len()))
            .try_fold(1usize, |acc, &d| acc.checked_mul(d));
        match dim {
            Some(dim) if dim <= MAX_TOTAL_DIM => {}
            other => return Err(NetworkError::DimensionCap { dim: other.unwrap_or(usize::MAX) }),
        }
        Ok(Self {
            subsystems,
            links,
            topology,
        })
    }

    /// Number of subsystems.
    pub fn n(&self) -> usize {
        self.subsystems.len()
    }

    pub fn subsystems(&self) -> &[SubsystemSpec] {
        &self.subsystems
    }

    pub fn links(&self) -> &[InterfaceLink] {
        &self.links
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn dims(&self) -> &[usize] {
        self.topology.dims()
    }

    /// Factor dimensions of the full space: subsystems, then one qubit per link.
    pub fn factor_dims(&self) -> Vec<usize> {
        let mut dims = self.dims().to_vec();
        dims.extend(std::iter::repeat_n(2, self.links.len()));
        dims
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims().iter().product()
    }

    /// Factor index of the interface qubit of `link`.
    pub fn link_factor(&self, link: usize) -> usize {
        self.n() + link
    }

    pub(crate) fn check_subsystem(&self, j: usize) -> Result<(), NetworkError> {
        if j >= self.n() {
            return Err(NetworkError::IndexOutOfRange {
                what: "subsystem",
                index: j,
                count: self.n(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_link(&self, link: usize) -> Result<(), NetworkError> {
        if link >= self.links.len() {
            return Err(NetworkError::IndexOutOfRange {
                what: "link",
                index: link,
                count: self.links.len(),
            });
        }
        Ok(())
    }

    /// Links with `j` as an endpoint, in link order.
    pub fn incident_links(&self, j: usize) -> Vec<usize> {
        (0..self.links.len())
            .filter(|&l| self.links[l].endpoints.contains(&j))
            .collect()
    }

    /// Coupling operator that `link` applies to subsystem `j`.
    pub(crate) fn coupling_on(&self, link: usize, j: usize) -> &HermitianOperator<f64> {
        let l = &self.links[link];
        if l.endpoints[0] == j {
            &l.coupling[0]
        } else {
            &l.coupling[1]
        }
    }

    /// H_j + Σ_ℓ s_ℓ A_j(ℓ) over incident links, with s_ℓ = `sign(ℓ)`.
    pub(crate) fn sector_hamiltonian(&self, j: usize, sign: impl Fn(usize) -> f64) -> HermitianOperator<f64> {
        let mut h = self.subsystems[j].hamiltonian.matrix().clone();
        for l in self.incident_links(j) {
            h.axpy(C64::new(sign(l), 0.0), self.coupling_on(l, j).matrix());
        }
        HermitianOperator::from_hermitian_part(&h)
    }

    /// Full-space operator acting as `op` on factor `factor`.
    fn lift(&self, op: &Mat, factor: usize) -> Mat {
        let dims = self.factor_dims();
        let ids: Vec<Mat> = dims
            .iter()
            .enumerate()
            .map(|(i, &d)| if i == factor { op.clone() } else { Mat::identity(d) })
            .collect();
        kron_all(&ids)
    }

    /// Σ_j H_j + Σ_ℓ (A_j(ℓ) + A_k(ℓ))⊗σz(ℓ) on the full space.
    pub fn network_hamiltonian(&self) -> HermitianOperator<f64> {
        let dims = self.factor_dims();
        let total: usize = dims.iter().product();
        let mut h = Mat::zeros(total, total);
        for (j, s) in self.subsystems.iter().enumerate() {
            h = &h + &self.lift(s.hamiltonian.matrix(), j);
        }
        let sz = pauli::sz::<f64>().into_matrix();
        for (l, link) in self.links.iter().enumerate() {
            let q = self.link_factor(l);
            for side in 0..2 {
                let factors: Vec<Mat> = dims
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| {
                        if i == link.endpoints[side] {
                            link.coupling[side].matrix().clone()
                        } else if i == q {
                            sz.clone()
                        } else {
                            Mat::identity(d)
                        }
                    })
                    .collect();
                h = &h + &kron_all(&factors);
            }
        }
        HermitianOperator::from_hermitian_part(&h)
    }
}

/// H_j + Σ incident A_j: the generator of subsystem j while every interface is |+1⟩.
pub fn effective_decoupled_hamiltonian(net: &NetworkSpec, j: usize) -> Result<HermitianOperator<f64>, NetworkError> {
    net.check_subsystem(j)?;
    Ok(net.sector_hamiltonian(j, |_| 1.0))
}

/// Largest deviation, over a seeded sample of product states, between full-network
/// evolution and independent evolution under the renormalized Hamiltonians, with
/// every interface in |+1⟩.
pub fn verify_decoupling(net: &NetworkSpec, t: f64) -> Result<f64, NetworkError> {
    verify_decoupling_sector(net, t, &vec![false; net.links().len()], DECOUPLING_SEED)
}

/// As [`verify_decoupling`], with interface ℓ prepared in |−1⟩ when `minus[ℓ]`; the
/// prediction then uses H_j + Σ_ℓ s_ℓ A_j(ℓ) with s_ℓ = −1 for those links.
pub fn verify_decoupling_sector(net: &NetworkSpec, t: f64, minus: &[bool], seed: u64) -> Result<f64, NetworkError> {
    if minus.len() != net.links().len() {
        return Err(NetworkError::DimensionMismatch {
            expected: net.links().len(),
            found: minus.len(),
        });
    }
    let u_full = expm_unitary(&net.network_hamiltonian(), t)?;
    let sign = |l: usize| if minus[l] { -1.0 } else { 1.0 };
    let local: Vec<Mat> = (0..net.n())
        .map(|j| expm_unitary(&net.sector_hamiltonian(j, sign), t).map(|u| u.into_matrix()))
        .collect::<Result<_, _>>()?;
    let interface: Vec<C64> = minus
        .iter()
        .map(|&m| if m { pauli::minus_one::<f64>() } else { pauli::plus_one() })
        .fold(vec![C64::new(1.0, 0.0)], |acc, q| crate::linalg::kron_vec(&acc, &q));

    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..DECOUPLING_SAMPLES {
        let psis: Vec<Vec<C64>> = net.dims().iter().map(|&d| sample_state_vector(d, &mut rng)).collect();
        let mut input = vec![C64::new(1.0, 0.0)];
        let mut predicted = vec![C64::new(1.0, 0.0)];
        for (psi, u) in psis.iter().zip(&local) {
            input = crate::linalg::kron_vec(&input, psi);
            predicted = crate::linalg::kron_vec(&predicted, &u.matvec(psi));
        }
        let input = crate::linalg::kron_vec(&input, &interface);
        let predicted = crate::linalg::kron_vec(&predicted, &interface);
        let evolved = u_full.matrix().matvec(&input);
        let diff: Vec<C64> = evolved.iter().zip(&predicted).map(|(a, b)| a - b).collect();
        worst = worst.max(crate::linalg::vector_norm(&diff));
    }
    Ok(worst)
}

/// Swap of two equal-dimensional factors, as a d²×d² matrix.
pub(crate) fn swap_matrix(d: usize) -> Mat {
    Mat::from_fn(d * d, d * d, |r, c| {
        let (a, b) = (r / d, r % d);
        if c == b * d + a {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Reorders a two-factor operator on A⊗B into the same operator on B⊗A.
pub(crate) fn exchange_factors(op: &Mat, da: usize, db: usize) -> Mat {
    Mat::from_fn(da * db, da * db, |r, c| {
        let (rb, ra) = (r / da, r % da);
        let (cb, ca) = (c / da, c % da);
        op[(ra * db + rb, ca * db + cb)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, random_hermitian};

    pub(crate) fn qubit(h: HermitianOperator<f64>) -> SubsystemSpec {
        SubsystemSpec { hamiltonian: h }
    }

    pub(crate) fn link(j: usize, k: usize, a: HermitianOperator<f64>, b: HermitianOperator<f64>) -> InterfaceLink {
        InterfaceLink {
            endpoints: [j, k],
            coupling: [a, b],
        }
    }

    fn random_chain(n: usize, seed: u64) -> NetworkSpec {
        let subs = (0..n).map(|j| qubit(random_hermitian(2, seed + j as u64))).collect();
        let links = (0..n - 1)
            .map(|j| link(j, j + 1, random_hermitian(2, seed + 100 + j as u64), random_hermitian(2, seed + 200 + j as u64)))
            .collect();
        NetworkSpec::new(subs, links).unwrap()
    }

    #[test]
    fn effective_hamiltonian_cases() {
        let h = random_hermitian::<f64>(2, 1);
        let single = NetworkSpec::new(vec![qubit(h.clone())], vec![]).unwrap();
        assert_eq!(effective_decoupled_hamiltonian(&single, 0).unwrap(), h);

        let zero = NetworkSpec::new(
            vec![qubit(h.clone()), qubit(h.clone())],
            vec![link(0, 1, HermitianOperator::zeros(2), HermitianOperator::zeros(2))],
        )
        .unwrap();
        assert_eq!(effective_decoupled_hamiltonian(&zero, 0).unwrap(), h);

        let net = random_chain(3, 7);
        let a1 = net.links()[0].coupling[1].clone();
        let a2 = net.links()[1].coupling[0].clone();
        let expected = net.subsystems()[1].hamiltonian.add(&a1).add(&a2);
        let got = effective_decoupled_hamiltonian(&net, 1).unwrap();
        assert!(got.matrix().max_abs_diff(expected.matrix()) < 1e-15);
        assert!(matches!(
            effective_decoupled_hamiltonian(&net, 3),
            Err(NetworkError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn decoupling_identity() {
        let net = random_chain(2, 3);
        assert_eq!(verify_decoupling(&net, 0.0).unwrap(), 0.0);
        assert!(verify_decoupling(&net, 1.0).unwrap() <= 1e-9);
        let flipped = verify_decoupling_sector(&net, 1.0, &[true], 1).unwrap();
        assert!(flipped <= 1e-9);
    }

    #[test]
    fn network_validation() {
        let h = || HermitianOperator::<f64>::zeros(2);
        let disconnected = NetworkSpec::new(vec![qubit(h()), qubit(h()), qubit(h())], vec![link(0, 1, h(), h())]);
        assert!(matches!(disconnected, Err(NetworkError::InvalidNetwork(_))));
        let self_loop = NetworkSpec::new(vec![qubit(h()), qubit(h())], vec![link(0, 0, h(), h())]);
        assert!(self_loop.is_err());
        let bad_coupling = NetworkSpec::new(
            vec![qubit(h()), qubit(h())],
            vec![link(0, 1, HermitianOperator::zeros(3), h())],
        );
        assert!(matches!(bad_coupling, Err(NetworkError::InvalidNetwork(_))));
        // 2^7 · 2^6 = 8192 > 4096.
        let subs = (0..7).map(|_| qubit(h())).collect();
        let links = (0..6).map(|j| link(j, j + 1, h(), h())).collect();
        assert!(matches!(NetworkSpec::new(subs, links), Err(NetworkError::DimensionCap { dim: 8192 })));
    }

    #[test]
    fn serde_round_trip_validates() {
        let net = random_chain(2, 9);
        let json = serde_json::to_string(&net).unwrap();
        let back: NetworkSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
        let mut raw: serde_json::Value = serde_json::from_str(&json).unwrap();
        raw["links"][0]["endpoints"] = serde_json::json!([1, 1]);
        assert!(serde_json::from_value::<NetworkSpec>(raw).is_err());
    }

    #[test]
    fn swap_and_exchange() {
        let s = swap_matrix(2);
        let a = random_hermitian::<f64>(2, 1).into_matrix();
        let b = random_hermitian::<f64>(2, 2).into_matrix();
        let ab = kron(&a, &b);
        assert!(s.matmul(&ab).matmul(&s).max_abs_diff(&kron(&b, &a)) < 1e-15);
        let c = random_hermitian::<f64>(3, 3).into_matrix();
        let ac = kron(&a, &c);
        assert!(exchange_factors(&ac, 2, 3).max_abs_diff(&kron(&c, &a)) < 1e-15);
    }
}
