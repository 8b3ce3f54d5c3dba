//! Validation of config documents into core types, and dispatch.

use serde::Serialize;
use serde_json::{json, Value};
use uqi_core::controllability::{
    is_bridge_controllable, is_controllable, BridgeSystem, ClosureOptions, ControlError, InterfaceSystem,
};
use uqi_core::linalg::{rng_from_seed, vector_norm, HermitianOperator};
use uqi_core::measurement::{
    yes_no_measure_with, yes_no_probabilities, KrausSet, MeasurementError, SequentialMeasurement, YesNoInstrument,
};
use uqi_core::network::{
    compile_circuit, run_circuit_with, state_transfer_with, CircuitGate, InterfaceLink, NetworkError, NetworkSpec,
    PairwiseRealizer, ProductState, SubsystemSpec,
};
use uqi_core::synthesis::{
    grape_optimize, reachability_scan, synthesize_measurement_unitary, ScanResult, SynthesisConfig, SynthesisError,
};
use uqi_core::{CMatrix, Complex64, Density, Hermitian, Unitary};

use crate::config::{
    AnalyzeConfig, BridgeConfig, CompileRunConfig, Config, MeasureConfig, NetworkIn, PairwiseIn, ScanConfig,
    StateIn, SynthesizeConfig, TransferConfig,
};
use crate::error::CliError;

/// Results payload, plus the scan table when the command produces one.
pub struct Output {
    pub results: Value,
    pub scan: Option<ScanResult>,
}

fn invalid(field: impl Into<String>, reason: impl ToString) -> CliError {
    CliError::Invalid {
        field: field.into(),
        reason: reason.to_string(),
    }
}

fn runtime(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("result types serialize to JSON")
}

fn hermitian(field: &str, m: &CMatrix) -> Result<Hermitian, CliError> {
    HermitianOperator::new(m.clone()).map_err(|e| invalid(field, e))
}

fn system(prefix: &str, h: &CMatrix, a: &CMatrix) -> Result<InterfaceSystem<f64>, CliError> {
    let h = hermitian(&format!("{prefix}H"), h)?;
    let a = hermitian(&format!("{prefix}A"), a)?;
    InterfaceSystem::new(h, a).map_err(|e| invalid(format!("{prefix}A"), e))
}

fn closure_options(tol: f64, max_depth: usize) -> Result<ClosureOptions, CliError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid("tol", "must be positive"));
    }
    if max_depth == 0 {
        return Err(invalid("max_depth", "must be at least 1"));
    }
    Ok(ClosureOptions { tol, max_depth })
}

fn synthesis_config(prefix: &str, cfg: &SynthesisConfig) -> Result<(), CliError> {
    cfg.validate().map_err(|e| match e {
        SynthesisError::InvalidConfig { field, reason } => invalid(format!("{prefix}{field}"), reason),
        other => runtime(other),
    })
}

fn unit_vector(field: &str, v: &[Complex64], dim: usize) -> Result<(), CliError> {
    if v.len() != dim {
        return Err(invalid(field, format!("has {} entries, expected {dim}", v.len())));
    }
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(invalid(field, "contains non-finite entries"));
    }
    let norm = vector_norm(v);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(invalid(field, format!("norm is {norm}, expected 1")));
    }
    Ok(())
}

fn control_error(e: ControlError) -> CliError {
    runtime(e)
}

pub fn dispatch(cfg: &Config) -> Result<Output, CliError> {
    let results = match cfg {
        Config::Analyze(c) => analyze(c)?,
        Config::Bridge(c) => bridge(c)?,
        Config::Synthesize(c) => synthesize(c)?,
        Config::Measure(c) => measure(c)?,
        Config::Scan(c) => {
            let scan = scan(c)?;
            return Ok(Output {
                results: to_value(&scan),
                scan: Some(scan),
            });
        }
        Config::Transfer(c) => transfer(c)?,
        Config::CompileRun(c) => compile_run(c)?,
    };
    Ok(Output { results, scan: None })
}

fn analyze(c: &AnalyzeConfig) -> Result<Value, CliError> {
    let sys = system("", &c.h, &c.a)?;
    let opts = closure_options(c.tol, c.max_depth)?;
    Ok(to_value(&is_controllable(&sys, opts).map_err(control_error)?))
}

fn bridge(c: &BridgeConfig) -> Result<Value, CliError> {
    let left = system("left.", &c.left.h, &c.left.a)?;
    let right = system("right.", &c.right.h, &c.right.a)?;
    let opts = closure_options(c.tol, c.max_depth)?;
    let report = is_bridge_controllable(&BridgeSystem::new(left, right), opts).map_err(control_error)?;
    Ok(to_value(&report))
}

fn synthesize(c: &SynthesizeConfig) -> Result<Value, CliError> {
    let sys = system("", &c.h, &c.a)?;
    synthesis_config("synthesis.", &c.synthesis)?;
    let result = match (&c.target, &c.g, c.theta) {
        (Some(t), None, None) => {
            let target = Unitary::new(t.clone()).map_err(|e| invalid("target", e))?;
            if target.dim() != sys.joint_dim() {
                return Err(invalid(
                    "target",
                    format!("is {}-dimensional, system plus interface is {}", target.dim(), sys.joint_dim()),
                ));
            }
            grape_optimize(&sys, &target, &c.synthesis)
        }
        (None, Some(g), Some(theta)) => {
            let g = hermitian("G", g)?;
            if g.dim() != sys.d() {
                return Err(invalid("G", format!("is {}-dimensional, H is {}", g.dim(), sys.d())));
            }
            if !theta.is_finite() {
                return Err(invalid("theta", "must be finite"));
            }
            synthesize_measurement_unitary(&sys, &g, theta, &c.synthesis)
        }
        (None, Some(_), None) => return Err(invalid("theta", "is required with G")),
        _ => return Err(invalid("target", "give either target, or G and theta")),
    }
    .map_err(runtime)?;
    Ok(to_value(&result))
}

fn measurement_error(field: &str, e: MeasurementError) -> CliError {
    match e {
        MeasurementError::Linalg(_) => runtime(e),
        other => invalid(field, other),
    }
}

fn measure(c: &MeasureConfig) -> Result<Value, CliError> {
    let rho = Density::new(c.rho.clone()).map_err(|e| invalid("rho", e))?;
    let d = rho.dim();
    if c.shots == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    let mut rng = rng_from_seed(c.seed.expect("seed resolved"));
    match (&c.g, &c.kraus) {
        (Some(g), None) => {
            let g = hermitian("G", g)?;
            if g.dim() != d {
                return Err(invalid("G", format!("is {}-dimensional, rho is {d}", g.dim())));
            }
            let theta = c.theta.ok_or_else(|| invalid("theta", "is required with G"))?;
            if !theta.is_finite() {
                return Err(invalid("theta", "must be finite"));
            }
            let inst = YesNoInstrument::new(g, theta).map_err(runtime)?;
            let (p_plus, p_minus) = yes_no_probabilities(&rho, &inst).map_err(runtime)?;
            let records = (0..c.shots)
                .map(|_| yes_no_measure_with(&rho, &inst, &mut rng))
                .collect::<Result<Vec<_>, _>>()
                .map_err(runtime)?;
            Ok(json!({
                "instrument": "yes-no",
                "p_plus": p_plus,
                "p_minus": p_minus,
                "records": records,
            }))
        }
        (None, Some(ops)) => {
            if c.theta.is_some() {
                return Err(invalid("theta", "only applies with G"));
            }
            if let Some(i) = ops.iter().position(|a| !a.is_square() || a.rows() != d) {
                return Err(invalid(format!("kraus[{i}]"), format!("must be {d}x{d} to act on rho")));
            }
            let ks = KrausSet::new(ops.clone()).map_err(|e| measurement_error("kraus", e))?;
            let chain = SequentialMeasurement::new(&ks).map_err(|e| measurement_error("kraus", e))?;
            let probabilities = ks.probabilities(&rho).map_err(runtime)?;
            let records = (0..c.shots)
                .map(|_| chain.measure_with(&rho, &mut rng))
                .collect::<Result<Vec<_>, _>>()
                .map_err(runtime)?;
            Ok(json!({
                "instrument": "sequential",
                "probabilities": probabilities,
                "records": records,
            }))
        }
        _ => Err(invalid("G", "give either G and theta, or kraus")),
    }
}

fn scan(c: &ScanConfig) -> Result<ScanResult, CliError> {
    let sys = system("", &c.h, &c.a)?;
    synthesis_config("synthesis.", &c.synthesis)?;
    let seed = c.seed.expect("seed resolved");
    reachability_scan(&sys, &c.durations, c.trials, &c.synthesis, seed).map_err(|e| match e {
        SynthesisError::InvalidConfig { field, reason } => invalid(field, reason),
        other => runtime(other),
    })
}

fn network(n: &NetworkIn) -> Result<NetworkSpec, CliError> {
    if n.subsystems.is_empty() {
        return Err(invalid("network.subsystems", "must not be empty"));
    }
    let subsystems = n
        .subsystems
        .iter()
        .enumerate()
        .map(|(j, s)| {
            Ok(SubsystemSpec {
                hamiltonian: hermitian(&format!("network.subsystems[{j}].hamiltonian"), &s.hamiltonian)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let links = n
        .links
        .iter()
        .enumerate()
        .map(|(l, link)| {
            let side = |s: usize| hermitian(&format!("network.links[{l}].coupling[{s}]"), &link.coupling[s]);
            Ok(InterfaceLink {
                endpoints: link.endpoints,
                coupling: [side(0)?, side(1)?],
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    NetworkSpec::new(subsystems, links).map_err(|e| match e {
        NetworkError::DimensionCap { .. } => invalid("network", e),
        other => invalid("network.links", other),
    })
}

fn realizer(p: &PairwiseIn) -> Result<PairwiseRealizer, CliError> {
    match p {
        PairwiseIn::Synthesized { synthesis } => {
            synthesis_config("pairwise.synthesis.", synthesis)?;
            Ok(PairwiseRealizer::synthesized(synthesis.clone()))
        }
        PairwiseIn::Exact { duration } => {
            if !(*duration >= 0.0 && duration.is_finite()) {
                return Err(invalid("pairwise.duration", "must be non-negative"));
            }
            Ok(PairwiseRealizer::exact(*duration))
        }
    }
}

fn transfer(c: &TransferConfig) -> Result<Value, CliError> {
    let net = network(&c.network)?;
    for (field, j) in [("from", c.from), ("to", c.to)] {
        if j >= net.n() {
            return Err(invalid(field, format!("subsystem {j} out of range ({} subsystems)", net.n())));
        }
    }
    let d = net.dims()[c.from];
    if net.dims()[c.to] != d {
        return Err(invalid("to", format!("is {}-dimensional, from is {d}", net.dims()[c.to])));
    }
    let state = match &c.state {
        StateIn::Vector(v) => {
            unit_vector("state.vector", v, d)?;
            Density::from_pure(v).map_err(|e| invalid("state.vector", e))?
        }
        StateIn::Rho(m) => {
            let rho = Density::new(m.clone()).map_err(|e| invalid("state.rho", e))?;
            if rho.dim() != d {
                return Err(invalid("state.rho", format!("is {}-dimensional, expected {d}", rho.dim())));
            }
            rho
        }
    };
    let mut realizer = realizer(&c.pairwise)?;
    let result = state_transfer_with(&net, c.from, c.to, &state, &mut realizer).map_err(runtime)?;
    let mut out = to_value(&result);
    out["pairwise"] = to_value(&realizer.summaries());
    Ok(out)
}

fn compile_run(c: &CompileRunConfig) -> Result<Value, CliError> {
    let net = network(&c.network)?;
    let gates = c
        .gates
        .iter()
        .enumerate()
        .map(|(i, g)| {
            Ok(CircuitGate {
                pair: g.pair,
                unitary: Unitary::new(g.unitary.clone()).map_err(|e| invalid(format!("gates[{i}].unitary"), e))?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let initial = match &c.initial {
        Some(init) => {
            if init.subsystems.len() != net.n() {
                return Err(invalid(
                    "initial.subsystems",
                    format!("has {} states for {} subsystems", init.subsystems.len(), net.n()),
                ));
            }
            for (j, v) in init.subsystems.iter().enumerate() {
                unit_vector(&format!("initial.subsystems[{j}]"), v, net.dims()[j])?;
            }
            if let Some(q) = &init.interfaces {
                if q.len() != net.links().len() {
                    return Err(invalid(
                        "initial.interfaces",
                        format!("has {} states for {} links", q.len(), net.links().len()),
                    ));
                }
                for (l, v) in q.iter().enumerate() {
                    unit_vector(&format!("initial.interfaces[{l}]"), v, 2)?;
                }
            }
            ProductState {
                subsystems: init.subsystems.clone(),
                interfaces: init.interfaces.clone(),
            }
        }
        None => ProductState {
            subsystems: net
                .dims()
                .iter()
                .map(|&d| (0..d).map(|i| Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)).collect())
                .collect(),
            interfaces: None,
        },
    };
    let mut realizer = realizer(&c.pairwise)?;
    let report = compile_circuit(net.topology(), &gates).map_err(|e| match e {
        NetworkError::InvalidGate { index, reason } => invalid(format!("gates[{index}]"), reason),
        other => runtime(other),
    })?;
    let run = run_circuit_with(&net, &report, &initial, &mut realizer, c.seed.expect("seed resolved"))
        .map_err(runtime)?;
    Ok(json!({
        "compilation": report,
        "fidelity": run.fidelity,
        "run": run,
    }))
}
