//! Parameterized circuits, the hardware-efficient ansatz, and the VQC
//! forward pass (encode, run ansatz, measure Z, map to `[0, 1]`).

use serde::{Deserialize, Serialize};

use crate::encoding::{EncoderKind, EncoderSpec};
use crate::error::{shape_err, Error, Result};
use crate::simulator::{Gate, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn gate(self, target: usize, angle: f64) -> Gate {
        match self {
            Axis::X => Gate::Rx { target, angle },
            Axis::Y => Gate::Ry { target, angle },
            Axis::Z => Gate::Rz { target, angle },
        }
    }
}

/// One step of a [`ParamCircuit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Op {
    Fixed(Gate),
    /// Rotation whose angle is read from parameter `slot`.
    Rotation { axis: Axis, target: usize, slot: usize },
}

impl Op {
    pub fn bind(&self, params: &[f64]) -> Gate {
        match *self {
            Op::Fixed(g) => g,
            Op::Rotation { axis, target, slot } => axis.gate(target, params[slot]),
        }
    }

    fn qubits(&self) -> Vec<usize> {
        match self {
            Op::Fixed(g) => g.qubits().collect(),
            Op::Rotation { target, .. } => vec![*target],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Entangler {
    #[default]
    #[serde(rename = "cnot-ring")]
    CnotRing,
    #[serde(rename = "cz-ring")]
    CzRing,
}

/// Ordered gate templates over a fixed register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCircuit {
    n_qubits: usize,
    ops: Vec<Op>,
    n_params: usize,
}

impl ParamCircuit {
    /// Checks that every slot in `0..n_params` is used and every qubit index
    /// is in range.
    pub fn new(n_qubits: usize, ops: Vec<Op>) -> Result<Self> {
        let mut used = Vec::new();
        for op in &ops {
            match op {
                Op::Fixed(g) => g.validate(n_qubits)?,
                Op::Rotation { target, slot, .. } => {
                    if *target >= n_qubits {
                        return Err(Error::Index { index: *target, n_qubits });
                    }
                    if used.len() <= *slot {
                        used.resize(slot + 1, false);
                    }
                    used[*slot] = true;
                }
            }
        }
        if let Some(gap) = used.iter().position(|u| !u) {
            return Err(Error::Config(format!("parameter slot {gap} is never used")));
        }
        Ok(Self { n_qubits, ops, n_params: used.len() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn run(&self, state: &mut StateVector, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(shape_err(format!(
                "circuit has {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        for op in &self.ops {
            state.apply(&op.bind(params))?;
        }
        Ok(())
    }

    /// Number of as-soon-as-possible layers.
    pub fn depth(&self) -> usize {
        let mut frontier = vec![0usize; self.n_qubits];
        for op in &self.ops {
            let qs = op.qubits();
            let layer = qs.iter().map(|&q| frontier[q]).max().unwrap_or(0) + 1;
            for q in qs {
                frontier[q] = layer;
            }
        }
        frontier.into_iter().max().unwrap_or(0)
    }
}

/// Hardware-efficient ansatz: each layer is RY then RZ on every qubit,
/// followed by a ring of entanglers `i -> (i+1) mod n` when `n >= 2`.
/// For `n == 2` the ring is a single gate.
pub fn build_ansatz(n_qubits: usize, layers: usize, entangler: Entangler) -> Result<ParamCircuit> {
    if n_qubits == 0 || layers == 0 {
        return Err(Error::Config("ansatz needs at least one qubit and one layer".into()));
    }
    let mut ops = Vec::with_capacity(layers * 3 * n_qubits);
    let mut slot = 0;
    for _ in 0..layers {
        for q in 0..n_qubits {
            for axis in [Axis::Y, Axis::Z] {
                ops.push(Op::Rotation { axis, target: q, slot });
                slot += 1;
            }
        }
        let ring = match n_qubits {
            1 => 0,
            2 => 1,
            n => n,
        };
        for i in 0..ring {
            let (control, target) = (i, (i + 1) % n_qubits);
            ops.push(Op::Fixed(match entangler {
                Entangler::CnotRing => Gate::Cnot { control, target },
                Entangler::CzRing => Gate::Cz { control, target },
            }));
        }
    }
    ParamCircuit::new(n_qubits, ops)
}

/// Declarative model description: encoder, ansatz shape, and measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VqcDesign {
    pub encoder: EncoderKind,
    pub input_dim: usize,
    pub ansatz_layers: usize,
    #[serde(default)]
    pub measured_qubit: usize,
    #[serde(default)]
    pub entangler: Entangler,
}

impl VqcDesign {
    pub fn build(&self) -> Result<Vqc> {
        let encoder = EncoderSpec::new(self.encoder, self.input_dim)?;
        let ansatz = build_ansatz(encoder.n_qubits(), self.ansatz_layers, self.entangler)?;
        if self.measured_qubit >= encoder.n_qubits() {
            return Err(Error::Index {
                index: self.measured_qubit,
                n_qubits: encoder.n_qubits(),
            });
        }
        Ok(Vqc {
            design: Some(*self),
            encoder,
            ansatz,
            measured_qubit: self.measured_qubit,
        })
    }
}

/// Unitary evolution must keep the register normalized to this tolerance.
pub const NORM_TOLERANCE: f64 = 1e-10;

pub(crate) fn check_norm(state: &StateVector) -> Result<()> {
    let norm = state.norm();
    if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
        return Err(Error::Numeric(format!("state norm drifted to {norm}")));
    }
    Ok(())
}

/// Maps `<Z>` in `[-1, 1]` to a prediction in `[0, 1]`.
#[inline]
pub fn output_map(expectation: f64) -> f64 {
    0.5 * (1.0 + expectation)
}

/// A compiled [`VqcDesign`].
#[derive(Debug, Clone)]
pub struct Vqc {
    design: Option<VqcDesign>,
    encoder: EncoderSpec,
    ansatz: ParamCircuit,
    measured_qubit: usize,
}

impl Vqc {
    /// Model over an arbitrary parameterized circuit.
    pub fn custom(encoder: EncoderSpec, ansatz: ParamCircuit, measured_qubit: usize) -> Result<Self> {
        if ansatz.n_qubits() != encoder.n_qubits() {
            return Err(shape_err(format!(
                "encoder emits {} qubits, circuit acts on {}",
                encoder.n_qubits(),
                ansatz.n_qubits()
            )));
        }
        if measured_qubit >= ansatz.n_qubits() {
            return Err(Error::Index {
                index: measured_qubit,
                n_qubits: ansatz.n_qubits(),
            });
        }
        Ok(Self { design: None, encoder, ansatz, measured_qubit })
    }

    /// The design this model was built from; `None` for [`Vqc::custom`].
    pub fn design(&self) -> Option<&VqcDesign> {
        self.design.as_ref()
    }

    pub fn encoder(&self) -> &EncoderSpec {
        &self.encoder
    }

    pub fn ansatz(&self) -> &ParamCircuit {
        &self.ansatz
    }

    pub fn n_qubits(&self) -> usize {
        self.ansatz.n_qubits()
    }

    pub fn n_params(&self) -> usize {
        self.ansatz.n_params()
    }

    pub fn depth(&self) -> usize {
        self.ansatz.depth()
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim
    }

    pub fn measured_qubit(&self) -> usize {
        self.measured_qubit
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(shape_err(format!(
                "model has {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        Ok(())
    }

    /// Final register state before measurement.
    pub fn state(&self, params: &[f64], x: &[f64]) -> Result<StateVector> {
        self.check_params(params)?;
        let mut state = self.encoder.encode(x)?;
        self.ansatz.run(&mut state, params)?;
        check_norm(&state)?;
        Ok(state)
    }

    /// Prediction in `[0, 1]`. Exact and deterministic.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<f64> {
        let z = self.state(params, x)?.expectation_z(self.measured_qubit())?;
        let pred = output_map(z);
        if !pred.is_finite() {
            return Err(Error::Numeric("non-finite prediction".into()));
        }
        Ok(pred)
    }
}
