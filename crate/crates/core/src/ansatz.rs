//! Layered hardware-efficient circuits.
//!
//! Each layer applies `RY(φ_k)` then `RZ(φ_{k+n})` to every qubit `k`,
//! followed by a fixed CNOT entangler. Parameters are stored layer-major:
//! within a layer the first `n` angles drive the RY gates and the next `n`
//! drive the RZ gates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::StateVector;

/// Entangling pattern applied after each rotation layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// CNOT chain `(0,1), (1,2), ..., (n-2,n-1)`.
    NearestNeighbor,
    /// Every pair `(i, j)` with `i < j`, lexicographic, control `i`.
    AllToAll,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::NearestNeighbor => "nearest_neighbor",
            Topology::AllToAll => "all_to_all",
        }
    }
}

/// Circuit shape: qubit count, number of layers and entangler topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircuitSpec {
    n_qubits: usize,
    layers: usize,
    topology: Topology,
}

impl CircuitSpec {
    pub fn new(n_qubits: usize, layers: usize, topology: Topology) -> Result<Self> {
        if !(crate::sim::MIN_QUBITS..=crate::sim::MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Config(format!("unsupported qubit count {n_qubits}")));
        }
        if layers == 0 {
            return Err(Error::Config("circuit needs at least one layer".into()));
        }
        Ok(Self {
            n_qubits,
            layers,
            topology,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// `2 n L`.
    pub fn param_count(&self) -> usize {
        2 * self.n_qubits * self.layers
    }

    /// Closed-form gate total: `L(3n-1)` or `L(n(n-1)/2 + 2n)`.
    pub fn gate_count(&self) -> usize {
        let n = self.n_qubits;
        match self.topology {
            Topology::NearestNeighbor => self.layers * (3 * n - 1),
            Topology::AllToAll => self.layers * (n * (n - 1) / 2 + 2 * n),
        }
    }

    pub fn entangler_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_qubits;
        match self.topology {
            Topology::NearestNeighbor => (0..n - 1).map(|k| (k, k + 1)).collect(),
            Topology::AllToAll => (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect(),
        }
    }

    /// Index of the parameter driving the RY (`rz = false`) or RZ gate on
    /// `qubit` in `layer`.
    pub fn param_index(&self, layer: usize, qubit: usize, rz: bool) -> usize {
        layer * 2 * self.n_qubits + if rz { self.n_qubits } else { 0 } + qubit
    }

    /// The full gate sequence in circuit order.
    pub fn gates(&self) -> Vec<Gate> {
        let pairs = self.entangler_pairs();
        let mut out = Vec::with_capacity(self.gate_count());
        for layer in 0..self.layers {
            for q in 0..self.n_qubits {
                out.push(Gate::Ry {
                    qubit: q,
                    param: self.param_index(layer, q, false),
                });
                out.push(Gate::Rz {
                    qubit: q,
                    param: self.param_index(layer, q, true),
                });
            }
            out.extend(pairs.iter().map(|&(control, target)| Gate::Cnot { control, target }));
        }
        out
    }
}

/// One gate of the ansatz; rotations reference a slot in the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Ry { qubit: usize, param: usize },
    Rz { qubit: usize, param: usize },
    Cnot { control: usize, target: usize },
}

/// Rotation angles in radians, layer-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(spec: &CircuitSpec) -> Self {
        Self(vec![0.0; spec.param_count()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Executes the circuit from `|0...0>`.
pub fn run_circuit(spec: &CircuitSpec, params: &[f64]) -> Result<StateVector> {
    run_circuit_observed(spec, params, |_| {})
}

/// Like [`run_circuit`], calling `observe` once per applied gate.
pub fn run_circuit_observed(
    spec: &CircuitSpec,
    params: &[f64],
    mut observe: impl FnMut(&Gate),
) -> Result<StateVector> {
    if params.len() != spec.param_count() {
        return Err(Error::Argument(format!(
            "circuit expects {} parameters, got {}",
            spec.param_count(),
            params.len()
        )));
    }
    let mut state = StateVector::zero(spec.n_qubits)?;
    for gate in spec.gates() {
        match gate {
            Gate::Ry { qubit, param } => state.apply_ry(qubit, params[param])?,
            Gate::Rz { qubit, param } => state.apply_rz(qubit, params[param])?,
            Gate::Cnot { control, target } => state.apply_cnot(control, target)?,
        }
        observe(&gate);
    }
    Ok(state)
}
