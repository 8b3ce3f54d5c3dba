//! Config documents: one JSON object per run with a top-level `command` key.
//!
//! Matrices use the interchange format (rows of `[re, im]` pairs) and are only
//! shape-checked here; physical invariants are checked in [`crate::commands`] so
//! violations can name the offending field.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use uqi_core::controllability::{DEFAULT_MAX_DEPTH, DEFAULT_TOL};
use uqi_core::synthesis::SynthesisConfig;
use uqi_core::{CMatrix, Complex64};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Analyze,
    Bridge,
    Synthesize,
    Measure,
    Scan,
    Transfer,
    CompileRun,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Bridge => "bridge",
            Command::Synthesize => "synthesize",
            Command::Measure => "measure",
            Command::Scan => "scan",
            Command::Transfer => "transfer",
            Command::CompileRun => "compile-run",
        }
    }
}

/// Command-line overrides applied on top of the config document.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_depth() -> usize {
    DEFAULT_MAX_DEPTH
}

fn default_shots() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemIn {
    #[serde(rename = "H")]
    pub h: CMatrix,
    #[serde(rename = "A")]
    pub a: CMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    #[serde(rename = "H")]
    pub h: CMatrix,
    #[serde(rename = "A")]
    pub a: CMatrix,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeConfig {
    pub left: SystemIn,
    pub right: SystemIn,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
}

/// The target is either an explicit unitary or exp(−iθ G⊗σx).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeConfig {
    #[serde(rename = "H")]
    pub h: CMatrix,
    #[serde(rename = "A")]
    pub a: CMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<CMatrix>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<CMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Either the yes/no instrument (`G`, `theta`) or a commuting Kraus family.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub rho: CMatrix,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<CMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<CMatrix>>,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(rename = "H")]
    pub h: CMatrix,
    #[serde(rename = "A")]
    pub a: CMatrix,
    pub durations: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemIn {
    pub hamiltonian: CMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkIn {
    pub endpoints: [usize; 2],
    pub coupling: [CMatrix; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkIn {
    pub subsystems: Vec<SubsystemIn>,
    pub links: Vec<LinkIn>,
}

/// How pairwise operations are realized.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PairwiseIn {
    Synthesized {
        #[serde(default)]
        synthesis: SynthesisConfig,
    },
    Exact {
        duration: f64,
    },
}

impl Default for PairwiseIn {
    fn default() -> Self {
        PairwiseIn::Synthesized {
            synthesis: SynthesisConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum StateIn {
    Vector(Vec<Complex64>),
    Rho(CMatrix),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub network: NetworkIn,
    pub from: usize,
    pub to: usize,
    pub state: StateIn,
    #[serde(default)]
    pub pairwise: PairwiseIn,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateIn {
    pub pair: [usize; 2],
    pub unitary: CMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialIn {
    pub subsystems: Vec<Vec<Complex64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interfaces: Option<Vec<Vec<Complex64>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileRunConfig {
    pub network: NetworkIn,
    pub gates: Vec<GateIn>,
    /// Defaults to every subsystem in its first basis state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialIn>,
    #[serde(default)]
    pub pairwise: PairwiseIn,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub enum Config {
    Analyze(AnalyzeConfig),
    Bridge(BridgeConfig),
    Synthesize(SynthesizeConfig),
    Measure(MeasureConfig),
    Scan(ScanConfig),
    Transfer(TransferConfig),
    CompileRun(CompileRunConfig),
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn from_value<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Parse(e.to_string()))
}

impl Config {
    /// Parses a config document for `command`. A `command` key, when present, must
    /// agree with the command line.
    pub fn parse(command: Command, text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        let Value::Object(mut map) = value else {
            return Err(CliError::Parse("config must be a JSON object".into()));
        };
        match map.remove("command") {
            None => {}
            Some(Value::String(c)) if c == command.name() => {}
            Some(Value::String(c)) => {
                return Err(invalid(
                    "command",
                    format!("config is for {c:?} but {:?} was requested", command.name()),
                ))
            }
            Some(_) => return Err(CliError::Parse("\"command\" must be a string".into())),
        }
        let v = Value::Object(map);
        Ok(match command {
            Command::Analyze => Config::Analyze(from_value(v)?),
            Command::Bridge => Config::Bridge(from_value(v)?),
            Command::Synthesize => Config::Synthesize(from_value(v)?),
            Command::Measure => Config::Measure(from_value(v)?),
            Command::Scan => Config::Scan(from_value(v)?),
            Command::Transfer => Config::Transfer(from_value(v)?),
            Command::CompileRun => Config::CompileRun(from_value(v)?),
        })
    }

    pub fn command(&self) -> Command {
        match self {
            Config::Analyze(_) => Command::Analyze,
            Config::Bridge(_) => Command::Bridge,
            Config::Synthesize(_) => Command::Synthesize,
            Config::Measure(_) => Command::Measure,
            Config::Scan(_) => Command::Scan,
            Config::Transfer(_) => Command::Transfer,
            Config::CompileRun(_) => Command::CompileRun,
        }
    }

    /// Applies command-line overrides and resolves the seed, so that the echoed
    /// config reproduces the run on its own.
    pub fn apply(&mut self, o: Overrides) -> Result<(), CliError> {
        let name = self.command().name();
        let unused = |flag: &str| invalid(flag, format!("not used by {name}"));
        let seed_slot: Option<&mut Option<u64>> = match self {
            Config::Analyze(_) | Config::Bridge(_) => None,
            Config::Synthesize(c) => Some(&mut c.seed),
            Config::Measure(c) => Some(&mut c.seed),
            Config::Scan(c) => Some(&mut c.seed),
            Config::Transfer(c) => Some(&mut c.seed),
            Config::CompileRun(c) => Some(&mut c.seed),
        };
        let seed = match seed_slot {
            None if o.seed.is_some() => return Err(unused("--seed")),
            None => None,
            Some(slot) => {
                if o.seed.is_some() {
                    *slot = o.seed;
                }
                Some(slot.ok_or_else(|| invalid("seed", format!("{name} needs a seed")))?)
            }
        };

        match self {
            Config::Analyze(AnalyzeConfig { tol, .. }) | Config::Bridge(BridgeConfig { tol, .. }) => {
                if o.max_iters.is_some() {
                    return Err(unused("--max-iters"));
                }
                if let Some(t) = o.tol {
                    *tol = t;
                }
            }
            Config::Measure(_) => {
                if o.max_iters.is_some() {
                    return Err(unused("--max-iters"));
                }
                if o.tol.is_some() {
                    return Err(unused("--tol"));
                }
            }
            Config::Synthesize(SynthesizeConfig { synthesis, .. }) | Config::Scan(ScanConfig { synthesis, .. }) => {
                override_synthesis(synthesis, o, seed);
            }
            Config::Transfer(TransferConfig { pairwise, .. }) | Config::CompileRun(CompileRunConfig { pairwise, .. }) => {
                match pairwise {
                    PairwiseIn::Synthesized { synthesis } => override_synthesis(synthesis, o, seed),
                    PairwiseIn::Exact { .. } => {
                        if o.max_iters.is_some() {
                            return Err(unused("--max-iters"));
                        }
                        if o.tol.is_some() {
                            return Err(unused("--tol"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The effective config as a document accepted by [`Config::parse`].
    pub fn echo(&self) -> Value {
        let body = match self {
            Config::Analyze(c) => serde_json::to_value(c),
            Config::Bridge(c) => serde_json::to_value(c),
            Config::Synthesize(c) => serde_json::to_value(c),
            Config::Measure(c) => serde_json::to_value(c),
            Config::Scan(c) => serde_json::to_value(c),
            Config::Transfer(c) => serde_json::to_value(c),
            Config::CompileRun(c) => serde_json::to_value(c),
        }
        .expect("config types serialize to JSON");
        let mut map = match body {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        map.insert("command".into(), Value::String(self.command().name().into()));
        Value::Object(map)
    }
}

/// The synthesis seed always follows the run seed.
fn override_synthesis(cfg: &mut SynthesisConfig, o: Overrides, seed: Option<u64>) {
    if let Some(n) = o.max_iters {
        cfg.max_iters = n;
    }
    if let Some(t) = o.tol {
        cfg.target_infidelity = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
}
