use serde::{Deserialize, Serialize};

use super::gate::{Gate, GateKind};
use super::state::{StateVector, MAX_QUBITS};
use crate::error::{dim, invalid, Result};

/// One step of an ansatz template. Rotations read their angle from a
/// parameter slot at binding time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "UPPERCASE")]
pub enum LayoutOp {
    Rx { qubit: usize, slot: usize },
    Ry { qubit: usize, slot: usize },
    Cx { control: usize, target: usize },
    Cz { a: usize, b: usize },
}

impl LayoutOp {
    pub fn kind(&self) -> GateKind {
        match self {
            LayoutOp::Rx { .. } => GateKind::Rx,
            LayoutOp::Ry { .. } => GateKind::Ry,
            LayoutOp::Cx { .. } => GateKind::Cx,
            LayoutOp::Cz { .. } => GateKind::Cz,
        }
    }

    fn bind(&self, angle_of: impl Fn(usize) -> f64) -> Gate {
        match *self {
            LayoutOp::Rx { qubit, slot } => Gate::Rx {
                qubit,
                angle: angle_of(slot),
            },
            LayoutOp::Ry { qubit, slot } => Gate::Ry {
                qubit,
                angle: angle_of(slot),
            },
            LayoutOp::Cx { control, target } => Gate::Cx { control, target },
            LayoutOp::Cz { a, b } => Gate::Cz { a, b },
        }
    }

    fn slot(&self) -> Option<usize> {
        match *self {
            LayoutOp::Rx { slot, .. } | LayoutOp::Ry { slot, .. } => Some(slot),
            _ => None,
        }
    }
}

/// Data-encoding circuit: a gate template whose rotation angles are
/// `bandwidth * x[slot]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub n_params: usize,
    pub bandwidth: f64,
    pub layout: Vec<LayoutOp>,
}

/// Alternating rotation and entangling layers on a linear chain.
///
/// Rotation layer `l` applies RX (even `l`) or RY (odd `l`) to every qubit
/// `q`, reading slot `l * n + q`. Between two rotation layers sits a CZ
/// (after even layers) or CX (after odd layers) on each pair `(q, q + 1)`.
pub fn build_ansatz(n_qubits: usize, n_params: usize, bandwidth: f64) -> Result<CircuitSpec> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(invalid(format!("register width {n_qubits} outside 1..={MAX_QUBITS}")));
    }
    if n_params == 0 || n_params % n_qubits != 0 {
        return Err(invalid(format!(
            "{n_params} parameters cannot fill whole rotation layers of {n_qubits} qubits"
        )));
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let n_layers = n_params / n_qubits;
    let mut layout = Vec::new();
    for layer in 0..n_layers {
        for qubit in 0..n_qubits {
            let slot = layer * n_qubits + qubit;
            layout.push(if layer % 2 == 0 {
                LayoutOp::Rx { qubit, slot }
            } else {
                LayoutOp::Ry { qubit, slot }
            });
        }
        if layer + 1 < n_layers {
            for q in 0..n_qubits.saturating_sub(1) {
                layout.push(if layer % 2 == 0 {
                    LayoutOp::Cz { a: q, b: q + 1 }
                } else {
                    LayoutOp::Cx {
                        control: q,
                        target: q + 1,
                    }
                });
            }
        }
    }
    Ok(CircuitSpec {
        n_qubits,
        n_params,
        bandwidth,
        layout,
    })
}

impl CircuitSpec {
    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<CircuitSpec> {
        let spec = CircuitSpec {
            bandwidth,
            ..self.clone()
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks gate indices and that every slot in `0..n_params` is bound
    /// exactly once.
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(invalid(format!(
                "register width {} outside 1..={MAX_QUBITS}",
                self.n_qubits
            )));
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(invalid(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        let mut seen = vec![false; self.n_params];
        for op in &self.layout {
            op.bind(|_| 0.0).validate(self.n_qubits)?;
            if let Some(slot) = op.slot() {
                match seen.get_mut(slot) {
                    Some(flag) if !*flag => *flag = true,
                    Some(_) => return Err(invalid(format!("slot {slot} bound twice"))),
                    None => {
                        return Err(invalid(format!(
                            "slot {slot} outside 0..{}",
                            self.n_params
                        )))
                    }
                }
            }
        }
        if let Some(free) = seen.iter().position(|s| !s) {
            return Err(invalid(format!("slot {free} is never used")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<CircuitSpec> {
        let spec: CircuitSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Kinds of consecutive same-kind runs, e.g. `[RX, CZ, RY]`.
    pub fn layer_kinds(&self) -> Vec<GateKind> {
        let mut kinds: Vec<GateKind> = Vec::new();
        for op in &self.layout {
            if kinds.last() != Some(&op.kind()) {
                kinds.push(op.kind());
            }
        }
        kinds
    }

    pub fn bind(&self, x: &[f64]) -> Result<Vec<Gate>> {
        if x.len() != self.n_params {
            return Err(dim(format!(
                "circuit takes {} features, got {}",
                self.n_params,
                x.len()
            )));
        }
        Ok(self
            .layout
            .iter()
            .map(|op| op.bind(|slot| self.bandwidth * x[slot]))
            .collect())
    }

    /// Gates of U(x) followed by U(y)^-1.
    pub fn inversion_test(&self, x: &[f64], y: &[f64]) -> Result<Vec<Gate>> {
        let mut gates = self.bind(x)?;
        gates.extend(self.bind(y)?.iter().rev().map(Gate::inverse));
        Ok(gates)
    }
}

/// U(x)|0...0>
pub fn encode(spec: &CircuitSpec, x: &[f64]) -> Result<StateVector> {
    run(spec.n_qubits, &spec.bind(x)?)
}

pub(crate) fn run(n_qubits: usize, gates: &[Gate]) -> Result<StateVector> {
    let mut state = StateVector::zero(n_qubits)?;
    for g in gates {
        state.apply(g)?;
    }
    Ok(state)
}
