//! Pairwise synthesis through an interface and exact execution of schedules.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::routing::transfer_schedule;
use super::tensor::Layout;
use super::{exchange_factors, swap_matrix, CompilationReport, Mat, NetworkError, NetworkSpec, ScheduleEntry};
use super::{route, MIN_PAIRWISE_FIDELITY};
use crate::linalg::{
    expm_unitary, hermitian_eig, kron_all, pauli, rng_from_seed, uhlmann_fidelity, vector_norm, DensityMatrix,
};
use crate::measurement::Outcome;
use crate::synthesis::{ControlProblem, Objective, PulseSequence, SynthesisConfig};

type C64 = Complex<f64>;

/// Subspace fidelity on the interface |+1⟩ sector minus leakage out of it.
///
/// For V on S_a ⊗ Q ⊗ S_b, F_sub = |tr(T† V₊₊)| / (d_a d_b) where V₊₊ is the block
/// with Q = |+1⟩ on both sides, and leakage is ‖P₋ V P₊‖_F.
struct SubspaceObjective {
    target_adjoint: Mat,
    da: usize,
    db: usize,
}

impl SubspaceObjective {
    fn new(target: &Mat, da: usize, db: usize) -> Self {
        Self {
            target_adjoint: target.adjoint(),
            da,
            db,
        }
    }

    fn index(&self, sa: usize, q: usize, sb: usize) -> usize {
        (sa * 2 + q) * self.db + sb
    }

    /// (F_sub, leakage).
    fn parts(&self, v: &Mat) -> (f64, f64) {
        let n = self.da * self.db;
        let full = |pair: usize, q: usize| self.index(pair / self.db, q, pair % self.db);
        let mut tr = C64::new(0.0, 0.0);
        let mut leak = 0.0;
        for c in 0..n {
            for r in 0..n {
                tr += self.target_adjoint[(c, r)] * v[(full(r, 0), full(c, 0))];
                leak += v[(full(r, 1), full(c, 0))].norm_sqr();
            }
        }
        ((tr.norm() / n as f64).min(1.0), leak.sqrt())
    }
}

impl Objective for SubspaceObjective {
    fn value(&self, v: &Mat) -> f64 {
        let (f, leak) = self.parts(v);
        f - leak * leak
    }

    fn score(&self, v: &Mat) -> f64 {
        let (f, leak) = self.parts(v);
        f - leak
    }

    fn gradient(&self, v: &Mat) -> Mat {
        let n = self.da * self.db;
        let full = |pair: usize, q: usize| self.index(pair / self.db, q, pair % self.db);
        let mut tr = C64::new(0.0, 0.0);
        for c in 0..n {
            for r in 0..n {
                tr += self.target_adjoint[(c, r)] * v[(full(r, 0), full(c, 0))];
            }
        }
        let mut g = Mat::zeros(v.rows(), v.cols());
        for c in 0..n {
            for r in 0..n {
                if tr.norm() > 0.0 {
                    g[(full(r, 0), full(c, 0))] = tr / (tr.norm() * n as f64) * self.target_adjoint[(c, r)].conj();
                }
                {
                    g[(full(r, 1), full(c, 0))] = -2.0 * v[(full(r, 1), full(c, 0))];
                }
            }
        }
        g
    }
}

/// Drift and interface controls of S_a ⊗ Q_link ⊗ S_b, where every other interface
/// touching a or b contributes s_ℓ·A with s_ℓ = `sign(ℓ)`.
fn three_body_problem(net: &NetworkSpec, link: usize, sign: &dyn Fn(usize) -> f64) -> ControlProblem {
    let [a, b] = net.links()[link].endpoints;
    let renormalized = |j: usize| {
        let mut h = net.subsystems()[j].hamiltonian.matrix().clone();
        for l in net.incident_links(j) {
            if l != link {
                h.axpy(C64::new(sign(l), 0.0), net.coupling_on(l, j).matrix());
            }
        }
        h
    };
    let (da, db) = (net.dims()[a], net.dims()[b]);
    let (ia, i2, ib) = (Mat::identity(da), Mat::identity(2), Mat::identity(db));
    let sz = pauli::sz::<f64>().into_matrix();
    let coupling = &net.links()[link].coupling;
    let drift = [
        kron_all(&[renormalized(a), i2.clone(), ib.clone()]),
        kron_all(&[ia.clone(), i2.clone(), renormalized(b)]),
        kron_all(&[coupling[0].matrix().clone(), sz.clone(), ib.clone()]),
        kron_all(&[ia.clone(), sz, coupling[1].matrix().clone()]),
    ]
    .iter()
    .fold(Mat::zeros(da * 2 * db, da * 2 * db), |acc, m| &acc + m);
    let controls = [pauli::sx::<f64>(), pauli::sy(), pauli::sz()]
        .map(|s| kron_all(&[ia.clone(), s.into_matrix(), ib.clone()]));
    ControlProblem::new(drift, controls)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub link: usize,
    pub pulse: PulseSequence,
    pub subspace_fidelity: f64,
    pub leakage: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl PairwiseResult {
    /// The optimized figure of merit, F_sub − leakage.
    pub fn score(&self) -> f64 {
        self.subspace_fidelity - self.leakage
    }
}

/// Synthesizes `target` (on S_a ⊗ S_b, a and b the link endpoints in order) as a
/// pulse on the link's interface qubit that returns the interface to |+1⟩.
///
/// Other interfaces are assumed to be in |+1⟩, so the endpoints evolve under their
/// renormalized Hamiltonians with respect to those links.
pub fn pairwise_unitary(
    net: &NetworkSpec,
    link: usize,
    target: &Mat,
    cfg: &SynthesisConfig,
) -> Result<PairwiseResult, NetworkError> {
    net.check_link(link)?;
    cfg.validate()?;
    let [a, b] = net.links()[link].endpoints;
    let (da, db) = (net.dims()[a], net.dims()[b]);
    if target.rows() != da * db || !target.is_square() {
        return Err(NetworkError::DimensionMismatch {
            expected: da * db,
            found: target.rows(),
        });
    }
    let problem = three_body_problem(net, link, &|_| 1.0);
    let obj = SubspaceObjective::new(target, da, db);
    let (amps, value, iterations) = problem.optimize(&obj, cfg);
    let (subspace_fidelity, leakage) = obj.parts(&problem.propagate(&amps, cfg.dt));
    Ok(PairwiseResult {
        link,
        pulse: PulseSequence {
            dt: cfg.dt,
            amp_bound: cfg.amp_bound,
            amps,
        },
        subspace_fidelity,
        leakage,
        iterations,
        converged: 1.0 - value <= cfg.target_infidelity,
    })
}

/// How pairwise operations are physically realized.
#[derive(Clone, Debug, PartialEq)]
pub enum PairwiseMode {
    /// Optimized pulses, one synthesis per distinct (link, target).
    Synthesized(SynthesisConfig),
    /// The target applied exactly on the |+1⟩ sector (identity on |−1⟩), taking
    /// `duration` during which every other subsystem idles.
    Exact { duration: f64 },
}

/// Realizes pairwise operations and caches syntheses by (link, target).
#[derive(Clone, Debug)]
pub struct PairwiseRealizer {
    mode: PairwiseMode,
    cache: BTreeMap<(usize, Vec<u64>), PairwiseResult>,
}

type CacheKey = (usize, Vec<u64>);

fn cache_key(link: usize, target: &Mat) -> CacheKey {
    let bits = target
        .as_slice()
        .iter()
        .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
        .collect();
    (link, bits)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseSummary {
    pub link: usize,
    pub subspace_fidelity: f64,
    pub leakage: f64,
    pub iterations: usize,
    pub converged: bool,
    pub duration: f64,
}

impl PairwiseRealizer {
    pub fn new(mode: PairwiseMode) -> Self {
        Self {
            mode,
            cache: BTreeMap::new(),
        }
    }

    pub fn synthesized(cfg: SynthesisConfig) -> Self {
        Self::new(PairwiseMode::Synthesized(cfg))
    }

    pub fn exact(duration: f64) -> Self {
        Self::new(PairwiseMode::Exact { duration })
    }

    /// Wall-clock length of one pairwise operation.
    pub fn op_duration(&self) -> f64 {
        match &self.mode {
            PairwiseMode::Synthesized(cfg) => cfg.n_slices as f64 * cfg.dt,
            PairwiseMode::Exact { duration } => *duration,
        }
    }

    /// Synthesis results collected so far, in cache order.
    pub fn summaries(&self) -> Vec<PairwiseSummary> {
        self.cache
            .values()
            .map(|r| PairwiseSummary {
                link: r.link,
                subspace_fidelity: r.subspace_fidelity,
                leakage: r.leakage,
                iterations: r.iterations,
                converged: r.converged,
                duration: r.pulse.duration(),
            })
            .collect()
    }

    /// Synthesizes every missing (link, target) in parallel and checks the results.
    fn prepare(&mut self, net: &NetworkSpec, requests: &[(usize, Mat)]) -> Result<(), NetworkError> {
        let PairwiseMode::Synthesized(cfg) = &self.mode else {
            return Ok(());
        };
        let mut missing: BTreeMap<CacheKey, (usize, &Mat)> = BTreeMap::new();
        for (link, target) in requests {
            let key = cache_key(*link, target);
            if !self.cache.contains_key(&key) {
                missing.insert(key, (*link, target));
            }
        }
        let results: Vec<(CacheKey, PairwiseResult)> = missing
            .into_par_iter()
            .map(|(key, (link, target))| pairwise_unitary(net, link, target, cfg).map(|r| (key, r)))
            .collect::<Result<_, _>>()?;
        self.cache.extend(results);
        for (link, target) in requests {
            let r = &self.cache[&cache_key(*link, target)];
            if r.score() < MIN_PAIRWISE_FIDELITY {
                return Err(NetworkError::SynthesisFailed {
                    link: *link,
                    fidelity: r.score(),
                });
            }
        }
        Ok(())
    }

    /// Operator on S_a ⊗ Q ⊗ S_b for one sign configuration of the other interfaces.
    fn block(&self, net: &NetworkSpec, link: usize, target: &Mat, sign: &dyn Fn(usize) -> f64) -> Mat {
        match &self.mode {
            PairwiseMode::Synthesized(_) => {
                let r = &self.cache[&cache_key(link, target)];
                three_body_problem(net, link, sign).propagate(&r.pulse.amps, r.pulse.dt)
            }
            PairwiseMode::Exact { .. } => {
                let [a, b] = net.links()[link].endpoints;
                let (da, db) = (net.dims()[a], net.dims()[b]);
                let obj = SubspaceObjective::new(target, da, db);
                let n = da * 2 * db;
                let mut v = Mat::zeros(n, n);
                for r in 0..da * db {
                    let (ra, rb) = (r / db, r % db);
                    v[(obj.index(ra, 1, rb), obj.index(ra, 1, rb))] = C64::new(1.0, 0.0);
                    for c in 0..da * db {
                        v[(obj.index(ra, 0, rb), obj.index(c / db, 0, c % db))] = target[(r, c)];
                    }
                }
                v
            }
        }
    }
}

/// Initial pure product state: one vector per subsystem and, optionally, per
/// interface (interfaces default to |+1⟩ before preparation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    pub subsystems: Vec<Vec<C64>>,
    #[serde(default)]
    pub interfaces: Option<Vec<Vec<C64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Full-network state vector in factor order (subsystems, then interfaces).
    pub final_state: Vec<C64>,
    pub fidelity: f64,
    pub interface_outcomes: Vec<Outcome>,
    pub pairwise: Vec<PairwiseSummary>,
    pub total_duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub fidelity: f64,
    pub schedule_length: usize,
    pub path: Vec<usize>,
}

/// Target of a pairwise entry, reordered onto the link's endpoint order.
fn link_target(net: &NetworkSpec, entry: &ScheduleEntry) -> Option<(usize, Mat)> {
    let (link, pair, op) = match entry {
        ScheduleEntry::RoutingSwap { link, pair } => (*link, *pair, swap_matrix(net.dims()[pair[0]])),
        ScheduleEntry::Gate { link, pair, unitary, .. } => (*link, *pair, unitary.matrix().clone()),
        ScheduleEntry::IdleFrame { .. } => return None,
    };
    let op = if net.links()[link].endpoints == pair {
        op
    } else {
        exchange_factors(&op, net.dims()[pair[0]], net.dims()[pair[1]])
    };
    Some((link, op))
}

fn check_schedule(net: &NetworkSpec, report: &CompilationReport) -> Result<(), NetworkError> {
    for (index, entry) in report.schedule.iter().enumerate() {
        let bad = |reason: String| NetworkError::InvalidGate { index, reason };
        match entry {
            ScheduleEntry::RoutingSwap { link, pair } | ScheduleEntry::Gate { link, pair, .. } => {
                net.check_link(*link)?;
                let ends = net.links()[*link].endpoints;
                if !(ends == *pair || ends == [pair[1], pair[0]]) {
                    return Err(bad(format!("pair {pair:?} is not joined by link {link}")));
                }
                let dims = [net.dims()[pair[0]], net.dims()[pair[1]]];
                match entry {
                    ScheduleEntry::RoutingSwap { .. } if dims[0] != dims[1] => {
                        return Err(bad("swap between subsystems of different dimension".into()));
                    }
                    ScheduleEntry::Gate { unitary, .. } if unitary.dim() != dims[0] * dims[1] => {
                        return Err(bad(format!("unitary dimension {} for pair {pair:?}", unitary.dim())));
                    }
                    _ => {}
                }
            }
            ScheduleEntry::IdleFrame { subsystem, .. } => net.check_subsystem(*subsystem)?,
        }
    }
    Ok(())
}

/// Exact evolution of the full network state through a schedule.
struct Executor<'a> {
    net: &'a NetworkSpec,
    layout: Layout,
    duration: f64,
}

impl Executor<'_> {
    /// Sign configurations of `links`: bit i set means link i's interface is |−1⟩.
    fn for_each_config(&self, links: &[usize], mut f: impl FnMut(&dyn Fn(usize) -> f64, &[(usize, usize)])) {
        for mask in 0..(1usize << links.len()) {
            let bit = |l: usize| links.iter().position(|&x| x == l).map(|i| (mask >> i) & 1);
            let sign = |l: usize| if bit(l) == Some(1) { -1.0 } else { 1.0 };
            let condition: Vec<(usize, usize)> = links
                .iter()
                .enumerate()
                .map(|(i, &l)| (self.net.link_factor(l), (mask >> i) & 1))
                .collect();
            f(&sign, &condition);
        }
    }

    /// Free evolution of subsystem m for time t, exact in every interface sector.
    fn idle(&self, state: &mut [C64], m: usize, t: f64) -> Result<(), NetworkError> {
        if t == 0.0 {
            return Ok(());
        }
        let links = self.net.incident_links(m);
        let mut result = Ok(());
        self.for_each_config(&links, |sign, condition| {
            match expm_unitary(&self.net.sector_hamiltonian(m, sign), t) {
                Ok(u) => self.layout.apply(state, &[m], u.matrix(), condition),
                Err(e) => result = Err(e.into()),
            }
        });
        result
    }

    fn pairwise(
        &self,
        state: &mut [C64],
        link: usize,
        target: &Mat,
        realizer: &PairwiseRealizer,
    ) -> Result<(), NetworkError> {
        let [a, b] = self.net.links()[link].endpoints;
        let mut others: Vec<usize> = self
            .net
            .incident_links(a)
            .into_iter()
            .chain(self.net.incident_links(b))
            .filter(|&l| l != link)
            .collect();
        others.sort_unstable();
        others.dedup();
        let targets = [a, self.net.link_factor(link), b];
        self.for_each_config(&others, |sign, condition| {
            let v = realizer.block(self.net, link, target, sign);
            self.layout.apply(state, &targets, &v, condition);
        });
        for m in 0..self.net.n() {
            if m != a && m != b {
                self.idle(state, m, self.duration)?;
            }
        }
        Ok(())
    }

    fn run(&self, state: &mut [C64], schedule: &[ScheduleEntry], realizer: &PairwiseRealizer) -> Result<(), NetworkError> {
        for entry in schedule {
            if let Some((link, target)) = link_target(self.net, entry) {
                self.pairwise(state, link, &target, realizer)?;
            }
        }
        Ok(())
    }
}

/// Abstract circuit on the subsystems alone: exact pairwise unitaries plus the
/// idle frames recorded in the schedule.
fn ideal_state(
    net: &NetworkSpec,
    schedule: &[ScheduleEntry],
    initial: &[Vec<C64>],
    duration: f64,
) -> Result<Vec<C64>, NetworkError> {
    let layout = Layout::new(net.dims().to_vec());
    let mut state = layout.product_state(initial);
    for entry in schedule {
        match entry {
            ScheduleEntry::RoutingSwap { pair, .. } => {
                layout.apply(&mut state, pair, &swap_matrix(net.dims()[pair[0]]), &[]);
            }
            ScheduleEntry::Gate { pair, unitary, .. } => layout.apply(&mut state, pair, unitary.matrix(), &[]),
            ScheduleEntry::IdleFrame { subsystem, slots } => {
                let h = net.sector_hamiltonian(*subsystem, |_| 1.0);
                let u = expm_unitary(&h, duration * *slots as f64)?;
                layout.apply(&mut state, &[*subsystem], u.matrix(), &[]);
            }
        }
    }
    Ok(state)
}

fn check_vectors(what: &'static str, vectors: &[Vec<C64>], dims: &[usize]) -> Result<(), NetworkError> {
    if vectors.len() != dims.len() {
        return Err(NetworkError::DimensionMismatch {
            expected: dims.len(),
            found: vectors.len(),
        });
    }
    for (i, (v, &d)) in vectors.iter().zip(dims).enumerate() {
        if v.len() != d {
            return Err(NetworkError::DimensionMismatch { expected: d, found: v.len() });
        }
        let norm = vector_norm(v);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(NetworkError::InvalidNetwork(format!("{what} state {i} has norm {norm}")));
        }
    }
    Ok(())
}

/// Executes a compiled schedule with synthesized pulses; see [`run_circuit_with`].
pub fn run_circuit(
    net: &NetworkSpec,
    report: &CompilationReport,
    cfg: &SynthesisConfig,
    initial: &ProductState,
) -> Result<RunResult, NetworkError> {
    run_circuit_with(net, report, initial, &mut PairwiseRealizer::synthesized(cfg.clone()), cfg.seed)
}

/// Prepares every interface in |+1⟩ by a seeded σz measurement (flipping after a
/// −1 outcome), then evolves the full network exactly through the schedule. The
/// returned fidelity is |⟨ideal ⊗ +…+|final⟩|² against [`CompilationReport`]'s
/// abstract circuit with its idle frames.
pub fn run_circuit_with(
    net: &NetworkSpec,
    report: &CompilationReport,
    initial: &ProductState,
    realizer: &mut PairwiseRealizer,
    seed: u64,
) -> Result<RunResult, NetworkError> {
    check_schedule(net, report)?;
    check_vectors("subsystem", &initial.subsystems, net.dims())?;
    let n_links = net.links().len();
    let interfaces = match &initial.interfaces {
        Some(v) => v.clone(),
        None => vec![pauli::plus_one(); n_links],
    };
    check_vectors("interface", &interfaces, &vec![2; n_links])?;

    let layout = Layout::new(net.factor_dims());
    let mut factors = initial.subsystems.clone();
    factors.extend(interfaces);
    let mut state = layout.product_state(&factors);

    let mut rng = rng_from_seed(seed);
    let sx = pauli::sx::<f64>().into_matrix();
    let mut interface_outcomes = Vec::with_capacity(n_links);
    for l in 0..n_links {
        let q = net.link_factor(l);
        let p_minus = layout.probability(&state, q, 1);
        let minus = p_minus >= 1e-12 && (p_minus > 1.0 - 1e-12 || rng.random::<f64>() < p_minus);
        layout.collapse(&mut state, q, minus as usize);
        if minus {
            layout.apply(&mut state, &[q], &sx, &[]);
        }
        interface_outcomes.push(if minus { Outcome::Minus } else { Outcome::Plus });
    }

    let requests: Vec<(usize, Mat)> = report.schedule.iter().filter_map(|e| link_target(net, e)).collect();
    realizer.prepare(net, &requests)?;
    let duration = realizer.op_duration();
    let exec = Executor { net, layout, duration };
    exec.run(&mut state, &report.schedule, realizer)?;

    let ideal = ideal_state(net, &report.schedule, &initial.subsystems, duration)?;
    let stride = 1usize << n_links;
    let overlap: C64 = ideal.iter().enumerate().map(|(s, a)| a.conj() * state[s * stride]).sum();
    Ok(RunResult {
        final_state: state,
        fidelity: overlap.norm_sqr().min(1.0),
        interface_outcomes,
        pairwise: realizer.summaries(),
        total_duration: duration * requests.len() as f64,
    })
}

/// Moves `state` from subsystem j to subsystem k with synthesized swaps.
pub fn state_transfer(
    net: &NetworkSpec,
    j: usize,
    k: usize,
    state: &DensityMatrix<f64>,
    cfg: &SynthesisConfig,
) -> Result<TransferResult, NetworkError> {
    state_transfer_with(net, j, k, state, &mut PairwiseRealizer::synthesized(cfg.clone()))
}

/// Swaps the content of j along the route to k, with every other subsystem in its
/// first basis state and every interface in |+1⟩, and compares the reduced state of
/// k with the input by Uhlmann fidelity. Mixed inputs are run as their eigen-ensemble.
pub fn state_transfer_with(
    net: &NetworkSpec,
    j: usize,
    k: usize,
    state: &DensityMatrix<f64>,
    realizer: &mut PairwiseRealizer,
) -> Result<TransferResult, NetworkError> {
    net.check_subsystem(j)?;
    net.check_subsystem(k)?;
    let (dj, dk) = (net.dims()[j], net.dims()[k]);
    if dj != dk {
        return Err(NetworkError::DimensionMismatch { expected: dj, found: dk });
    }
    if state.dim() != dj {
        return Err(NetworkError::DimensionMismatch {
            expected: dj,
            found: state.dim(),
        });
    }
    let path = route(net.topology(), j, k)?;
    if j == k {
        return Ok(TransferResult {
            fidelity: 1.0,
            schedule_length: 0,
            path,
        });
    }
    if let Some(&m) = path.iter().find(|&&m| net.dims()[m] != dj) {
        return Err(NetworkError::DimensionMismatch {
            expected: dj,
            found: net.dims()[m],
        });
    }
    let schedule = transfer_schedule(net.topology(), &path);
    let requests: Vec<(usize, Mat)> = schedule.iter().filter_map(|e| link_target(net, e)).collect();
    realizer.prepare(net, &requests)?;
    let layout = Layout::new(net.factor_dims());
    let exec = Executor {
        net,
        layout: layout.clone(),
        duration: realizer.op_duration(),
    };

    let eig = hermitian_eig(&state.as_hermitian())?;
    let mut received = Mat::zeros(dk, dk);
    for (i, &w) in eig.values.iter().enumerate() {
        if w <= 1e-12 {
            continue;
        }
        let mut factors: Vec<Vec<C64>> = net
            .dims()
            .iter()
            .map(|&d| {
                let mut v = vec![C64::new(0.0, 0.0); d];
                v[0] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        factors[j] = eig.eigenvector(i);
        factors.extend(vec![pauli::plus_one(); net.links().len()]);
        let mut psi = layout.product_state(&factors);
        exec.run(&mut psi, &schedule, realizer)?;
        received.axpy(C64::new(w, 0.0), &layout.reduced(&psi, k));
    }
    let received = DensityMatrix::from_unnormalized(&received);
    let fidelity = uhlmann_fidelity(state, &received)?.clamp(0.0, 1.0);
    Ok(TransferResult {
        fidelity,
        schedule_length: requests.len(),
        path,
    })
}
