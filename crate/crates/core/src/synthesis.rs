//! Pulse synthesis on system ⊗ interface.
//!
//! The only tunable terms are piecewise-constant amplitudes on the three interface
//! Paulis; the drift H⊗I + A⊗σz is always on. Pulses are found by gradient ascent
//! on gate fidelity. The optimizer uses exact propagator derivatives, which the
//! tests check against central finite differences.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controllability::InterfaceSystem;
use crate::linalg::{
    expm_unitary, hermitian_eig, kron, pauli, rng_from_seed, sample_unitary, ComplexMatrix, HermitianEigen,
    HermitianOperator, LinalgError, UnitaryOperator,
};

type Mat = ComplexMatrix<f64>;

/// Default step of central finite-difference gradients.
pub const FD_STEP: f64 = 1e-6;
/// Halvings of the learning rate tried per iteration before the optimizer stalls.
pub const MAX_HALVINGS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("amplitude {value} in slice {slice} exceeds bound {bound}")]
    AmplitudeOutOfBounds { slice: usize, value: f64, bound: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Piecewise-constant amplitudes (γx, γy, γz) on I⊗σx, I⊗σy, I⊗σz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub dt: f64,
    pub amp_bound: f64,
    pub amps: Vec<[f64; 3]>,
}

impl PulseSequence {
    pub fn new(dt: f64, amp_bound: f64, amps: Vec<[f64; 3]>) -> Result<Self, SynthesisError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(amp_bound > 0.0 && amp_bound.is_finite()) {
            return Err(invalid("amp_bound", "must be positive"));
        }
        if amps.is_empty() {
            return Err(invalid("n_slices", "must be at least 1"));
        }
        for (slice, a) in amps.iter().enumerate() {
            for &value in a {
                if value.is_nan() || value.abs() > amp_bound {
                    return Err(SynthesisError::AmplitudeOutOfBounds {
                        slice,
                        value,
                        bound: amp_bound,
                    });
                }
            }
        }
        Ok(Self { dt, amp_bound, amps })
    }

    pub fn zeros(n_slices: usize, dt: f64, amp_bound: f64) -> Result<Self, SynthesisError> {
        Self::new(dt, amp_bound, vec![[0.0; 3]; n_slices])
    }

    pub fn n_slices(&self) -> usize {
        self.amps.len()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.amps.len() as f64
    }

    /// Slices in reverse order with negated amplitudes.
    pub fn time_reversed(&self) -> Self {
        let amps = self.amps.iter().rev().map(|a| [-a[0], -a[1], -a[2]]).collect();
        Self { amps, ..*self }
    }
}

fn invalid(field: &'static str, reason: &str) -> SynthesisError {
    SynthesisError::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

/// Search direction of the pulse optimizer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Steepest ascent starting each iteration from `learning_rate`.
    #[default]
    GradientAscent,
    /// Limited-memory BFGS directions with unit initial step; much faster on
    /// larger joint spaces.
    Lbfgs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub n_slices: usize,
    pub dt: f64,
    pub amp_bound: f64,
    pub max_iters: usize,
    pub target_infidelity: f64,
    pub learning_rate: f64,
    pub seed: u64,
    pub method: Method,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            n_slices: 60,
            dt: 0.1,
            amp_bound: 10.0,
            max_iters: 2000,
            target_infidelity: 1e-3,
            learning_rate: 0.2,
            seed: 0,
            method: Method::GradientAscent,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        if self.n_slices == 0 {
            return Err(invalid("n_slices", "must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.amp_bound > 0.0 && self.amp_bound.is_finite()) {
            return Err(invalid("amp_bound", "must be positive"));
        }
        if !(self.target_infidelity > 0.0 && self.target_infidelity < 1.0) {
            return Err(invalid("target_infidelity", "must lie in (0, 1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub pulse: PulseSequence,
    pub fidelity: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub duration: f64,
    pub median_infidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    /// Heuristic decay time from a log-linear fit; absent when the fit is undefined.
    pub fitted_tau: Option<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Curvature pairs of a limited-memory BFGS model of the objective.
#[derive(Default)]
struct LbfgsMemory {
    pairs: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl LbfgsMemory {
    const DEPTH: usize = 10;

    fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Records the step x_old → x_new; curvature is that of −objective.
    fn push(&mut self, x_old: &[f64], x_new: &[f64], g_old: &[f64], g_new: &[f64]) {
        let s: Vec<f64> = x_new.iter().zip(x_old).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_old.iter().zip(g_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if self.pairs.len() == Self::DEPTH {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y, 1.0 / sy));
        }
    }

    /// Two-loop recursion: approximate inverse-Hessian applied to the ascent gradient.
    fn direction(&self, grad: &[f64]) -> Option<Vec<f64>> {
        let (s_last, y_last, _) = self.pairs.back()?;
        let mut q = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = dot(s_last, y_last) / dot(y_last, y_last);
        let mut r: Vec<f64> = q.iter().map(|v| gamma * v).collect();
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &r);
            r.iter_mut().zip(s).for_each(|(ri, si)| *ri += si * (a - b));
        }
        Some(r)
    }
}

/// Drift plus three Hermitian control directions on some joint space.
#[derive(Clone, Debug)]
pub(crate) struct ControlProblem {
    drift: Mat,
    controls: [Mat; 3],
}

/// Scalar figure of merit of a total propagator; higher is better, 1 is perfect.
pub(crate) trait Objective: Sync {
    fn value(&self, v: &Mat) -> f64;

    /// G with d(value) = Re tr(G† dV).
    fn gradient(&self, v: &Mat) -> Mat;

    /// Figure of merit judged against the target infidelity; `value` may be a
    /// smoother surrogate of it.
    fn score(&self, v: &Mat) -> f64 {
        self.value(v)
    }
}

/// |tr(T†V)| / D.
pub(crate) struct GateObjective {
    target_adjoint: Mat,
}

impl GateObjective {
    pub(crate) fn new(target: &Mat) -> Self {
        Self {
            target_adjoint: target.adjoint(),
        }
    }
}

impl GateObjective {
    fn overlap(&self, v: &Mat) -> Complex<f64> {
        let d = v.rows();
        let mut tr = Complex::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                tr += self.target_adjoint[(i, j)] * v[(j, i)];
            }
        }
        tr
    }
}

impl Objective for GateObjective {
    fn value(&self, v: &Mat) -> f64 {
        (self.overlap(v).norm() / v.rows() as f64).min(1.0)
    }

    fn gradient(&self, v: &Mat) -> Mat {
        let z = self.overlap(v);
        let d = v.rows() as f64;
        if z.norm() == 0.0 {
            return Mat::zeros(v.rows(), v.cols());
        }
        // d|z| = Re(conj(z)/|z| · tr(T† dV)), so G = z/|z| · T.
        let phase = z / (z.norm() * d);
        Mat::from_fn(v.rows(), v.cols(), |i, j| phase * self.target_adjoint[(j, i)].conj())
    }
}

impl ControlProblem {
    pub(crate) fn new(drift: Mat, controls: [Mat; 3]) -> Self {
        Self { drift, controls }
    }

    pub(crate) fn for_interface(sys: &InterfaceSystem<f64>) -> Self {
        let [x, y, z] = sys.interface_controls();
        Self::new(sys.drift().into_matrix(), [x.into_matrix(), y.into_matrix(), z.into_matrix()])
    }

    pub(crate) fn dim(&self) -> usize {
        self.drift.rows()
    }

    fn hamiltonian(&self, amps: &[f64; 3]) -> HermitianOperator<f64> {
        let mut h = self.drift.clone();
        for (c, &a) in self.controls.iter().zip(amps) {
            if a != 0.0 {
                h.axpy(Complex::new(a, 0.0), c);
            }
        }
        // The sum of Hermitian matrices is Hermitian up to rounding.
        HermitianOperator::from_hermitian_part(&h)
    }

    fn slice(&self, amps: &[f64; 3], dt: f64) -> Mat {
        expm_unitary(&self.hamiltonian(amps), dt)
            .expect("finite Hermitian generator")
            .into_matrix()
    }

    /// U_n ⋯ U_1 with slice 1 acting first.
    pub(crate) fn propagate(&self, amps: &[[f64; 3]], dt: f64) -> Mat {
        amps.iter()
            .fold(Mat::identity(self.dim()), |acc, a| self.slice(a, dt).matmul(&acc))
    }

    /// Exact gradient of `obj` with respect to every amplitude.
    ///
    /// With H_k = Q Λ Q†, the derivative of exp(−i dt H_k) along a control C is
    /// Q (Φ ∘ Q†CQ) Q† where Φ_ij = (f(λ_i) − f(λ_j)) / (λ_i − λ_j), f(λ) = e^{−iλ dt}.
    pub(crate) fn gradient(&self, obj: &dyn Objective, amps: &[[f64; 3]], dt: f64) -> Vec<[f64; 3]> {
        let n = amps.len();
        let d = self.dim();
        let eigs: Vec<HermitianEigen<f64>> = amps
            .iter()
            .map(|a| hermitian_eig(&self.hamiltonian(a)).expect("finite Hermitian generator"))
            .collect();
        let slices: Vec<Mat> = eigs.iter().map(|e| e.reassemble(|l| Complex::new(0.0, -l * dt).exp())).collect();
        let mut forward = Vec::with_capacity(n + 1);
        forward.push(Mat::identity(d));
        for u in &slices {
            let next = u.matmul(forward.last().unwrap());
            forward.push(next);
        }
        let mut backward = vec![Mat::identity(d); n + 1];
        for k in (0..n).rev() {
            backward[k] = backward[k + 1].matmul(&slices[k]);
        }
        let g = obj.gradient(&forward[n]);
        (0..n)
            .map(|k| {
                let q = eigs[k].vectors.matrix();
                let qd = q.adjoint();
                // W = B† G F† so that d(value) = Re tr(W† dU_k); rotate into the eigenbasis.
                let w = backward[k + 1].adjoint().matmul(&g).matmul(&forward[k].adjoint());
                let w = qd.matmul(&w).matmul(q);
                let lam = &eigs[k].values;
                let phi = Mat::from_fn(d, d, |i, j| {
                    let gap = lam[i] - lam[j];
                    let x = 0.5 * dt * gap;
                    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                    // (f(λi) − f(λj)) / (λi − λj) = −i dt e^{−i dt (λi+λj)/2} sinc(dt (λi−λj)/2)
                    let mid = Complex::new(0.0, -0.5 * dt * (lam[i] + lam[j])).exp();
                    Complex::new(0.0, -dt) * mid * sinc
                });
                std::array::from_fn(|c| {
                    let ct = qd.matmul(&self.controls[c]).matmul(q);
                    let mut acc = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            acc += (w[(i, j)].conj() * phi[(i, j)] * ct[(i, j)]).re;
                        }
                    }
                    acc
                })
            })
            .collect()
    }

    /// Central finite-difference gradient of `obj` with respect to every amplitude.
    pub(crate) fn fd_gradient(&self, obj: &dyn Objective, amps: &[[f64; 3]], dt: f64, step: f64) -> Vec<[f64; 3]> {
        let n = amps.len();
        let d = self.dim();
        let slices: Vec<Mat> = amps.par_iter().map(|a| self.slice(a, dt)).collect();
        // forward[k] = U_k ⋯ U_1 (forward[0] = I); backward[k] = U_n ⋯ U_{k+1} (backward[n] = I).
        let mut forward = Vec::with_capacity(n + 1);
        forward.push(Mat::identity(d));
        for u in &slices {
            let next = u.matmul(forward.last().unwrap());
            forward.push(next);
        }
        let mut backward = vec![Mat::identity(d); n + 1];
        for k in (0..n).rev() {
            backward[k] = backward[k + 1].matmul(&slices[k]);
        }
        (0..n)
            .into_par_iter()
            .map(|k| {
                let mut g = [0.0; 3];
                for (c, gc) in g.iter_mut().enumerate() {
                    let eval = |delta: f64| {
                        let mut a = amps[k];
                        a[c] += delta;
                        let v = backward[k + 1].matmul(&self.slice(&a, dt)).matmul(&forward[k]);
                        obj.value(&v)
                    };
                    *gc = (eval(step) - eval(-step)) / (2.0 * step);
                }
                g
            })
            .collect()
    }

    /// Ascent from `init`; returns (amps, score, accepted iterations).
    ///
    /// Each iteration tries a step along the search direction, halving it up to
    /// [`MAX_HALVINGS`] times until the objective strictly improves; amplitudes are
    /// clipped to the bound. An iteration with no improving step ends the search.
    pub(crate) fn ascend(
        &self,
        obj: &dyn Objective,
        cfg: &SynthesisConfig,
        init: Vec<[f64; 3]>,
    ) -> (Vec<[f64; 3]>, f64, usize) {
        let bound = cfg.amp_bound;
        let goal = 1.0 - cfg.target_infidelity;
        let mut amps = init;
        let v0 = self.propagate(&amps, cfg.dt);
        let (mut value, mut score) = (obj.value(&v0), obj.score(&v0));
        let mut iterations = 0;
        let mut memory = LbfgsMemory::default();
        let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
        while iterations < cfg.max_iters && score < goal {
            let grad: Vec<f64> = self.gradient(obj, &amps, cfg.dt).into_iter().flatten().collect();
            let x: Vec<f64> = amps.iter().flatten().copied().collect();
            if let Some((x_old, g_old)) = previous.take() {
                memory.push(&x_old, &x, &g_old, &grad);
            }
            let (dir, mut step) = match cfg.method {
                Method::GradientAscent => (grad.clone(), cfg.learning_rate),
                Method::Lbfgs => match memory.direction(&grad) {
                    Some(d) if dot(&d, &grad) > 0.0 => (d, 1.0),
                    _ => {
                        memory.clear();
                        (grad.clone(), cfg.learning_rate)
                    }
                },
            };
            let mut accepted = false;
            for _ in 0..=MAX_HALVINGS {
                let candidate: Vec<[f64; 3]> = x
                    .chunks(3)
                    .zip(dir.chunks(3))
                    .map(|(a, g)| std::array::from_fn(|c| (a[c] + step * g[c]).clamp(-bound, bound)))
                    .collect();
                let u = self.propagate(&candidate, cfg.dt);
                let v = obj.value(&u);
                if v > value {
                    amps = candidate;
                    value = v;
                    score = obj.score(&u);
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            previous = Some((x, grad));
            iterations += 1;
        }
        (amps, score, iterations)
    }

    /// Zero pulse if it already meets the goal, else ascent from seeded random amplitudes.
    pub(crate) fn optimize(&self, obj: &dyn Objective, cfg: &SynthesisConfig) -> (Vec<[f64; 3]>, f64, usize) {
        let zeros = vec![[0.0; 3]; cfg.n_slices];
        let v0 = obj.score(&self.propagate(&zeros, cfg.dt));
        if 1.0 - v0 <= cfg.target_infidelity {
            return (zeros, v0, 0);
        }
        let mut rng = rng_from_seed(cfg.seed);
        let half_width = cfg.amp_bound / 10.0;
        let init = (0..cfg.n_slices)
            .map(|_| std::array::from_fn(|_| rng.random_range(-half_width..=half_width)))
            .collect();
        self.ascend(obj, cfg, init)
    }
}

fn check_pulse(pulse: &PulseSequence) -> Result<(), SynthesisError> {
    PulseSequence::new(pulse.dt, pulse.amp_bound, pulse.amps.clone()).map(|_| ())
}

/// U = U_n ⋯ U_1, U_k = exp(−i dt (H⊗I + A⊗σz + Σ_c γ_{c,k} I⊗σ_c)).
pub fn propagate(sys: &InterfaceSystem<f64>, pulse: &PulseSequence) -> Result<UnitaryOperator<f64>, SynthesisError> {
    check_pulse(pulse)?;
    let problem = ControlProblem::for_interface(sys);
    Ok(UnitaryOperator::new_unchecked(problem.propagate(&pulse.amps, pulse.dt)))
}

/// Directional derivative of gate fidelity along `direction` by central differences.
pub fn directional_derivative(
    sys: &InterfaceSystem<f64>,
    target: &UnitaryOperator<f64>,
    pulse: &PulseSequence,
    direction: &[[f64; 3]],
    step: f64,
) -> Result<f64, SynthesisError> {
    check_target(sys, target)?;
    if direction.len() != pulse.n_slices() {
        return Err(SynthesisError::DimensionMismatch {
            expected: pulse.n_slices(),
            found: direction.len(),
        });
    }
    let problem = ControlProblem::for_interface(sys);
    let obj = GateObjective::new(target.matrix());
    let shifted = |s: f64| -> Vec<[f64; 3]> {
        pulse
            .amps
            .iter()
            .zip(direction)
            .map(|(a, u)| std::array::from_fn(|c| a[c] + s * u[c]))
            .collect()
    };
    let plus = obj.value(&problem.propagate(&shifted(step), pulse.dt));
    let minus = obj.value(&problem.propagate(&shifted(-step), pulse.dt));
    Ok((plus - minus) / (2.0 * step))
}

/// Per-amplitude gradient of gate fidelity by central finite differences.
pub fn finite_difference_gradient(
    sys: &InterfaceSystem<f64>,
    target: &UnitaryOperator<f64>,
    pulse: &PulseSequence,
    step: f64,
) -> Result<Vec<[f64; 3]>, SynthesisError> {
    check_target(sys, target)?;
    let problem = ControlProblem::for_interface(sys);
    let obj = GateObjective::new(target.matrix());
    Ok(problem.fd_gradient(&obj, &pulse.amps, pulse.dt, step))
}

/// Per-amplitude gradient of gate fidelity as used by the optimizer.
pub fn fidelity_gradient(
    sys: &InterfaceSystem<f64>,
    target: &UnitaryOperator<f64>,
    pulse: &PulseSequence,
) -> Result<Vec<[f64; 3]>, SynthesisError> {
    check_target(sys, target)?;
    let problem = ControlProblem::for_interface(sys);
    let obj = GateObjective::new(target.matrix());
    Ok(problem.gradient(&obj, &pulse.amps, pulse.dt))
}

fn check_target(sys: &InterfaceSystem<f64>, target: &UnitaryOperator<f64>) -> Result<(), SynthesisError> {
    if target.dim() != sys.joint_dim() {
        return Err(SynthesisError::DimensionMismatch {
            expected: sys.joint_dim(),
            found: target.dim(),
        });
    }
    Ok(())
}

/// Searches for a pulse whose propagator matches `target` up to global phase.
pub fn grape_optimize(
    sys: &InterfaceSystem<f64>,
    target: &UnitaryOperator<f64>,
    cfg: &SynthesisConfig,
) -> Result<SynthesisResult, SynthesisError> {
    cfg.validate()?;
    check_target(sys, target)?;
    let problem = ControlProblem::for_interface(sys);
    let obj = GateObjective::new(target.matrix());
    let (amps, fidelity, iterations) = problem.optimize(&obj, cfg);
    Ok(SynthesisResult {
        pulse: PulseSequence {
            dt: cfg.dt,
            amp_bound: cfg.amp_bound,
            amps,
        },
        fidelity,
        iterations,
        converged: 1.0 - fidelity <= cfg.target_infidelity,
    })
}

/// exp(−iθ G⊗σx), the entangling step of the yes/no measurement.
pub fn measurement_unitary(g: &HermitianOperator<f64>, theta: f64) -> Result<UnitaryOperator<f64>, SynthesisError> {
    let gx = HermitianOperator::from_hermitian_part(&kron(g.matrix(), pauli::sx::<f64>().matrix()));
    Ok(expm_unitary(&gx, theta)?)
}

/// Synthesizes exp(−iθ G⊗σx).
pub fn synthesize_measurement_unitary(
    sys: &InterfaceSystem<f64>,
    g: &HermitianOperator<f64>,
    theta: f64,
    cfg: &SynthesisConfig,
) -> Result<SynthesisResult, SynthesisError> {
    if g.dim() != sys.d() {
        return Err(SynthesisError::DimensionMismatch {
            expected: sys.d(),
            found: g.dim(),
        });
    }
    grape_optimize(sys, &measurement_unitary(g, theta)?, cfg)
}

/// Haar target for one scan trial, drawn from a stream separate from the optimizer's.
fn scan_target(dim: usize, seed: u64) -> UnitaryOperator<f64> {
    let mut rng = rng_from_seed(seed);
    rng.set_stream(1);
    sample_unitary(dim, &mut rng)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median optimized infidelity of Haar-random targets as a function of pulse duration.
///
/// Trial `i` uses seed `seed + i` for both its target and its optimizer start, so the
/// same targets are reused at every duration.
pub fn reachability_scan(
    sys: &InterfaceSystem<f64>,
    durations: &[f64],
    trials: usize,
    cfg: &SynthesisConfig,
    seed: u64,
) -> Result<ScanResult, SynthesisError> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    if durations.is_empty() {
        return Err(invalid("durations", "must not be empty"));
    }
    if durations.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(invalid("durations", "must be positive"));
    }
    if durations.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("durations", "must be strictly increasing"));
    }
    cfg.validate()?;
    let dim = sys.joint_dim();
    let targets: Vec<_> = (0..trials as u64).map(|i| scan_target(dim, seed.wrapping_add(i))).collect();

    let mut points = Vec::with_capacity(durations.len());
    for &t in durations {
        let n_slices = ((t / cfg.dt).round() as usize).max(1);
        let infidelities = targets
            .par_iter()
            .enumerate()
            .map(|(i, target)| {
                let trial_cfg = SynthesisConfig {
                    n_slices,
                    seed: seed.wrapping_add(i as u64),
                    ..cfg.clone()
                };
                grape_optimize(sys, target, &trial_cfg).map(|r| 1.0 - r.fidelity)
            })
            .collect::<Result<Vec<_>, _>>()?;
        points.push(ScanPoint {
            duration: t,
            median_infidelity: median(infidelities),
        });
    }
    let fitted_tau = fit_tau(&points, dim);
    Ok(ScanResult { points, fitted_tau })
}

/// Least-squares slope of log(median) against t, reported as τ = −1/(slope·D²).
fn fit_tau(points: &[ScanPoint], dim: usize) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|p| p.median_infidelity.is_nan() || p.median_infidelity <= 0.0) {
        return None;
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.duration).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.median_infidelity.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for p in points {
        let dt = p.duration - mean_t;
        sxy += dt * (p.median_infidelity.ln() - mean_y);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / (slope * (dim * dim) as f64))
}
