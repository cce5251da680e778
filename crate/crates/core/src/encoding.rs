//! Data encoders: map a real feature vector onto an initial register state.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{Gate, StateVector, MAX_QUBITS};

/// Inputs whose Euclidean norm falls below this cannot be amplitude encoded.
pub const MIN_AMPLITUDE_NORM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderKind {
    Amplitude,
    Angle,
    /// Tensor product of `duplications + 1` amplitude-encoded copies.
    StVqc { duplications: usize },
}

impl EncoderKind {
    pub fn label(&self) -> String {
        match self {
            EncoderKind::Amplitude => "Amplitude".into(),
            EncoderKind::Angle => "Angle".into(),
            EncoderKind::StVqc { duplications } => format!("ST-VQC({duplications} dup.)"),
        }
    }

    /// Highest polynomial order (in the encoded amplitudes) reachable by a
    /// Z measurement after a unitary: two per encoded copy.
    pub fn polynomial_order(&self) -> usize {
        match self {
            EncoderKind::StVqc { duplications } => 2 * (duplications + 1),
            _ => 2,
        }
    }
}

/// An encoder bound to a fixed input dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub kind: EncoderKind,
    pub input_dim: usize,
}

/// `ceil(log2(d))`, at least 1.
pub(crate) fn address_qubits(input_dim: usize) -> usize {
    (input_dim.max(2).next_power_of_two().trailing_zeros() as usize).max(1)
}

impl EncoderSpec {
    pub fn new(kind: EncoderKind, input_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Config("input dimension must be positive".into()));
        }
        let spec = Self { kind, input_dim };
        let n = spec.n_qubits();
        if n > MAX_QUBITS {
            return Err(Error::Config(format!(
                "{} on {input_dim} inputs needs {n} qubits (cap {MAX_QUBITS})",
                kind.label()
            )));
        }
        Ok(spec)
    }

    pub fn n_qubits(&self) -> usize {
        match self.kind {
            EncoderKind::Amplitude => address_qubits(self.input_dim),
            EncoderKind::Angle => self.input_dim,
            EncoderKind::StVqc { duplications } => {
                (duplications + 1) * address_qubits(self.input_dim)
            }
        }
    }

    pub fn encode(&self, x: &[f64]) -> Result<StateVector> {
        if x.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "encoder expects {} inputs, got {}",
                self.input_dim,
                x.len()
            )));
        }
        match self.kind {
            EncoderKind::Amplitude => amplitude_encode(x),
            EncoderKind::Angle => angle_encode(x),
            EncoderKind::StVqc { duplications } => stvqc_encode(x, duplications),
        }
    }
}

/// Zero-pads `x` to the next power of two (minimum 2) and normalizes it.
pub fn amplitude_encode(x: &[f64]) -> Result<StateVector> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Encoding("non-finite input".into()));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < MIN_AMPLITUDE_NORM {
        return Err(Error::Encoding(format!(
            "input norm {norm:e} below {MIN_AMPLITUDE_NORM:e}"
        )));
    }
    let mut amps = vec![0.0; 1 << address_qubits(x.len())];
    for (a, v) in amps.iter_mut().zip(x) {
        *a = v / norm;
    }
    StateVector::from_real(&amps)
}

/// One qubit per feature, each rotated by `RY((x_i + 1) * pi/2)` so that
/// `[-1, 1]` maps onto polar angles `[0, pi]`.
pub fn angle_encode(x: &[f64]) -> Result<StateVector> {
    if let Some(v) = x.iter().find(|v| !(v.abs() <= 1.0)) {
        return Err(Error::Domain(format!("angle encoding needs |x| <= 1, got {v}")));
    }
    let mut state = StateVector::zero_state(x.len())?;
    for (target, v) in x.iter().enumerate() {
        state.apply(&Gate::Ry {
            target,
            angle: (v + 1.0) * FRAC_PI_2,
        })?;
    }
    Ok(state)
}

pub fn stvqc_encode(x: &[f64], duplications: usize) -> Result<StateVector> {
    let width = (duplications + 1) * address_qubits(x.len());
    if width > MAX_QUBITS {
        return Err(Error::Config(format!(
            "{duplications} duplications need {width} qubits (cap {MAX_QUBITS})"
        )));
    }
    let copy = amplitude_encode(x)?;
    let mut state = copy.clone();
    for _ in 0..duplications {
        state = state.tensor_product(&copy)?;
    }
    Ok(state)
}
