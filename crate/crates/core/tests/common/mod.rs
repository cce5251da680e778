#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use vqc_bench::Gate;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Textbook 2x2 matrices, written out independently of the simulator.
pub fn single(gate: &Gate) -> DMatrix<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let rows: [Complex64; 4] = match *gate {
        Gate::Rx { angle, .. } => {
            let (s, co) = ((angle / 2.0).sin(), (angle / 2.0).cos());
            [c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)]
        }
        Gate::Ry { angle, .. } => {
            let (s, co) = ((angle / 2.0).sin(), (angle / 2.0).cos());
            [c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]
        }
        Gate::Rz { angle, .. } => [
            Complex64::from_polar(1.0, -angle / 2.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            Complex64::from_polar(1.0, angle / 2.0),
        ],
        Gate::H { .. } => [c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)],
        Gate::Cnot { .. } => [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        Gate::Cz { .. } => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
    };
    DMatrix::from_row_slice(2, 2, &rows)
}

fn kron_chain(n: usize, factors: &[(usize, DMatrix<Complex64>)]) -> DMatrix<Complex64> {
    let mut out = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for q in 0..n {
        let f = factors
            .iter()
            .find(|(k, _)| *k == q)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| DMatrix::identity(2, 2));
        out = out.kronecker(&f);
    }
    out
}

/// Full `2^n x 2^n` unitary with qubit 0 as the leftmost tensor factor.
pub fn dense(gate: &Gate, n: usize) -> DMatrix<Complex64> {
    match gate.control() {
        None => kron_chain(n, &[(gate.target(), single(gate))]),
        Some(ctl) => {
            let p0 = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
            let p1 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
            kron_chain(n, &[(ctl, p0)]) + kron_chain(n, &[(ctl, p1), (gate.target(), single(gate))])
        }
    }
}

/// Decodes `(kind, a, b, angle)` into a valid gate on `n` qubits.
pub fn make_gate(kind: u8, a: usize, b: usize, angle: f64, n: usize) -> Gate {
    let target = a % n;
    let control = if n > 1 { (target + 1 + b % (n - 1)) % n } else { target };
    match kind % if n > 1 { 6 } else { 4 } {
        0 => Gate::Rx { target, angle },
        1 => Gate::Ry { target, angle },
        2 => Gate::Rz { target, angle },
        3 => Gate::H { target },
        4 => Gate::Cnot { control, target },
        _ => Gate::Cz { control, target },
    }
}

pub fn normalized(raw: &[(f64, f64)]) -> Vec<Complex64> {
    let norm = raw.iter().map(|(r, i)| r * r + i * i).sum::<f64>().sqrt();
    raw.iter().map(|&(r, i)| c(r / norm, i / norm)).collect()
}
