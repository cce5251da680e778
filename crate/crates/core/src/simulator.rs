//! Dense statevector simulation for small registers.
//!
//! Basis indices are big-endian in qubit order: qubit 0 is the most
//! significant bit of the amplitude index, so for two qubits the index of
//! `|q0 q1>` is `2*q0 + q1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on register width.
pub const MAX_QUBITS: usize = 12;

/// Gate set understood by the simulator. Rotation angles are in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Gate {
    Rx { target: usize, angle: f64 },
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    H { target: usize },
    Cnot { control: usize, target: usize },
    Cz { control: usize, target: usize },
}

impl Gate {
    pub fn target(&self) -> usize {
        match *self {
            Gate::Rx { target, .. }
            | Gate::Ry { target, .. }
            | Gate::Rz { target, .. }
            | Gate::H { target }
            | Gate::Cnot { target, .. }
            | Gate::Cz { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cnot { control, .. } | Gate::Cz { control, .. } => Some(control),
            _ => None,
        }
    }

    /// Qubits the gate touches, control first.
    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        self.control().into_iter().chain(std::iter::once(self.target()))
    }

    /// 2x2 matrix of a single-qubit gate, or of the target action of a
    /// controlled gate (X for CNOT, Z for CZ).
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match *self {
            Gate::Rx { angle, .. } => {
                let (s, co) = (angle / 2.0).sin_cos();
                [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
            }
            Gate::Ry { angle, .. } => {
                let (s, co) = (angle / 2.0).sin_cos();
                [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
            }
            Gate::Rz { angle, .. } => {
                let (s, co) = (angle / 2.0).sin_cos();
                [[c(co, -s), c(0.0, 0.0)], [c(0.0, 0.0), c(co, s)]]
            }
            Gate::H { .. } => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
            }
            Gate::Cnot { .. } => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            Gate::Cz { .. } => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        }
    }

    pub(crate) fn validate(&self, n_qubits: usize) -> Result<()> {
        for q in self.qubits() {
            if q >= n_qubits {
                return Err(Error::Index { index: q, n_qubits });
            }
        }
        if let Some(ctrl) = self.control() {
            if ctrl == self.target() {
                return Err(Error::Config(format!(
                    "control and target coincide on qubit {ctrl}"
                )));
            }
        }
        Ok(())
    }
}

/// Amplitudes of an `n_qubits` register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_width(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Config(format!(
            "register width {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        check_width(n_qubits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The length must be a power of two; no
    /// normalization is applied.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::Shape(format!(
                "{} amplitudes is not a power of two",
                amps.len()
            )));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        check_width(n_qubits)?;
        Ok(Self { n_qubits, amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let t = self.mask(gate.target());
        match *gate {
            Gate::Cnot { control, .. } => {
                let c = self.mask(control);
                for i in 0..self.amps.len() {
                    if i & c != 0 && i & t == 0 {
                        self.amps.swap(i, i | t);
                    }
                }
            }
            Gate::Cz { control, .. } => {
                let c = self.mask(control);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & c != 0 && i & t != 0 {
                        *a = -*a;
                    }
                }
            }
            _ => {
                let m = gate.matrix();
                for i in 0..self.amps.len() {
                    if i & t == 0 {
                        let (a0, a1) = (self.amps[i], self.amps[i | t]);
                        self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                        self.amps[i | t] = m[1][0] * a0 + m[1][1] * a1;
                    }
                }
            }
        }
        Ok(())
    }

    /// Returns a new state with `gate` applied.
    pub fn apply_gate(&self, gate: &Gate) -> Result<Self> {
        let mut out = self.clone();
        out.apply(gate)?;
        Ok(out)
    }

    /// Kronecker product `self ⊗ other`; `self` occupies the leading qubits.
    pub fn tensor_product(&self, other: &StateVector) -> Result<Self> {
        check_width(self.n_qubits + other.n_qubits)?;
        let amps = self
            .amps
            .iter()
            .flat_map(|&a| other.amps.iter().map(move |&b| a * b))
            .collect();
        Ok(Self {
            n_qubits: self.n_qubits + other.n_qubits,
            amps,
        })
    }

    /// `<Z>` on `qubit`: probability of bit 0 minus probability of bit 1.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.n_qubits {
            return Err(Error::Index {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let m = self.mask(qubit);
        let ev = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & m == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum::<f64>();
        Ok(ev.clamp(-1.0, 1.0))
    }
}
