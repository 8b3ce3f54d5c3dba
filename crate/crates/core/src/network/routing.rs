//! Coupling graph, shortest-path routing and swap-based circuit compilation.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::NetworkError;
use crate::linalg::UnitaryOperator;

/// Subsystem dimensions and interface links, without any Hamiltonian data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    dims: Vec<usize>,
    edges: Vec<[usize; 2]>,
}

impl Topology {
    /// Validates endpoints and connectivity.
    pub fn new(dims: Vec<usize>, edges: Vec<[usize; 2]>) -> Result<Self, NetworkError> {
        if dims.is_empty() {
            return Err(NetworkError::InvalidNetwork("no subsystems".into()));
        }
        if let Some(j) = dims.iter().position(|&d| d == 0) {
            return Err(NetworkError::InvalidNetwork(format!("subsystem {j} has dimension 0")));
        }
        for (l, &[j, k]) in edges.iter().enumerate() {
            if j >= dims.len() || k >= dims.len() {
                return Err(NetworkError::InvalidNetwork(format!(
                    "link {l} endpoint out of range ({} subsystems)",
                    dims.len()
                )));
            }
            if j == k {
                return Err(NetworkError::InvalidNetwork(format!("link {l} joins subsystem {j} to itself")));
            }
        }
        let top = Self { dims, edges };
        let reached = top.distances(0).iter().filter(|d| d.is_some()).count();
        if reached != top.n() {
            return Err(NetworkError::InvalidNetwork("link graph is not connected".into()));
        }
        Ok(top)
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Neighbors of `j` in increasing order, without repeats.
    pub fn neighbors(&self, j: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&[a, b]| match (a == j, b == j) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Lowest-index link joining `j` and `k`.
    pub fn link_between(&self, j: usize, k: usize) -> Option<usize> {
        self.edges
            .iter()
            .position(|&[a, b]| (a == j && b == k) || (a == k && b == j))
    }

    fn distances(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(dist[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn check(&self, j: usize) -> Result<(), NetworkError> {
        if j >= self.n() {
            return Err(NetworkError::IndexOutOfRange {
                what: "subsystem",
                index: j,
                count: self.n(),
            });
        }
        Ok(())
    }
}

/// Shortest path from `j` to `k` by breadth-first search, preferring lower-index
/// subsystems among equally short paths.
pub fn route(top: &Topology, j: usize, k: usize) -> Result<Vec<usize>, NetworkError> {
    top.check(j)?;
    top.check(k)?;
    // Searching from k and stepping greedily from j to the lowest-index neighbor
    // one hop closer gives the lexicographically smallest shortest path.
    let dist = top.distances(k);
    let mut path = vec![j];
    let mut at = j;
    while at != k {
        let here = dist[at].expect("graph is connected");
        at = top
            .neighbors(at)
            .into_iter()
            .find(|&v| dist[v] == Some(here - 1))
            .expect("a neighbor is one hop closer");
        path.push(at);
    }
    Ok(path)
}

/// A two-subsystem gate; `unitary` acts on S_{pair[0]} ⊗ S_{pair[1]}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitGate {
    pub pair: [usize; 2],
    pub unitary: UnitaryOperator<f64>,
}

/// One step of a compiled schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleEntry {
    /// Exchange of the contents of two adjacent subsystems over `link`.
    RoutingSwap { link: usize, pair: [usize; 2] },
    /// Circuit gate `gate` applied over `link` with `unitary` on S_{pair[0]} ⊗ S_{pair[1]}.
    Gate {
        link: usize,
        pair: [usize; 2],
        gate: usize,
        unitary: UnitaryOperator<f64>,
    },
    /// Free evolution of `subsystem` under its renormalized Hamiltonian for `slots`
    /// pairwise-operation durations.
    IdleFrame { subsystem: usize, slots: usize },
}

impl ScheduleEntry {
    pub fn is_pairwise(&self) -> bool {
        !matches!(self, ScheduleEntry::IdleFrame { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompilationReport {
    pub schedule: Vec<ScheduleEntry>,
    pub pairwise_op_count: usize,
    pub n: usize,
    pub gate_count: usize,
}

/// Frame bookkeeping while emitting pairwise operations.
struct Scheduler<'a> {
    top: &'a Topology,
    schedule: Vec<ScheduleEntry>,
    idle: Vec<usize>,
}

impl Scheduler<'_> {
    fn flush(&mut self, m: usize) {
        if self.idle[m] > 0 {
            self.schedule.push(ScheduleEntry::IdleFrame {
                subsystem: m,
                slots: self.idle[m],
            });
            self.idle[m] = 0;
        }
    }

    fn emit(&mut self, pair: [usize; 2], entry: ScheduleEntry) {
        self.flush(pair[0]);
        self.flush(pair[1]);
        self.schedule.push(entry);
        for m in 0..self.top.n() {
            if !pair.contains(&m) {
                self.idle[m] += 1;
            }
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        let link = self.top.link_between(a, b).expect("route steps follow links");
        self.emit([a, b], ScheduleEntry::RoutingSwap { link, pair: [a, b] });
    }
}

/// Compiles gates into adjacent pairwise operations: j's content is swapped along
/// the route until it neighbors k, the gate is applied, and the swaps are undone.
pub fn compile_circuit(top: &Topology, gates: &[CircuitGate]) -> Result<CompilationReport, NetworkError> {
    let mut s = Scheduler {
        top,
        schedule: Vec::new(),
        idle: vec![0; top.n()],
    };
    for (index, gate) in gates.iter().enumerate() {
        let [j, k] = gate.pair;
        let invalid = |reason: String| NetworkError::InvalidGate { index, reason };
        if j >= top.n() || k >= top.n() {
            return Err(invalid(format!("pair ({j}, {k}) out of range")));
        }
        if j == k {
            return Err(invalid("pair must name two different subsystems".into()));
        }
        let expected = top.dims[j] * top.dims[k];
        if gate.unitary.dim() != expected {
            return Err(invalid(format!(
                "unitary is {}-dimensional, pair needs {expected}",
                gate.unitary.dim()
            )));
        }
        let path = route(top, j, k)?;
        let hops = &path[..path.len() - 1];
        if let Some(&m) = hops.iter().find(|&&m| top.dims[m] != top.dims[j]) {
            return Err(invalid(format!(
                "routing through subsystem {m} needs dimension {}, found {}",
                top.dims[j], top.dims[m]
            )));
        }
        for w in hops.windows(2) {
            s.swap(w[0], w[1]);
        }
        let holder = *hops.last().unwrap();
        let link = top.link_between(holder, k).expect("holder neighbors k");
        s.emit(
            [holder, k],
            ScheduleEntry::Gate {
                link,
                pair: [holder, k],
                gate: index,
                unitary: gate.unitary.clone(),
            },
        );
        for w in hops.windows(2).rev() {
            s.swap(w[0], w[1]);
        }
    }
    for m in 0..top.n() {
        s.flush(m);
    }
    let pairwise_op_count = s.schedule.iter().filter(|e| e.is_pairwise()).count();
    Ok(CompilationReport {
        schedule: s.schedule,
        pairwise_op_count,
        n: top.n(),
        gate_count: gates.len(),
    })
}

/// Swap-only schedule carrying the content of `path[0]` to the end of `path`.
pub(crate) fn transfer_schedule(top: &Topology, path: &[usize]) -> Vec<ScheduleEntry> {
    let mut s = Scheduler {
        top,
        schedule: Vec::new(),
        idle: vec![0; top.n()],
    };
    for w in path.windows(2) {
        s.swap(w[0], w[1]);
    }
    for m in 0..top.n() {
        s.flush(m);
    }
    s.schedule
}
