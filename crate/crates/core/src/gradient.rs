//! Loss gradients via the parameter-shift rule, with a central finite
//! difference reference.
//!
//! The loss is the batch mean squared error of the model prediction
//! `p = (1 + <Z>)/2`. For a rotation `exp(-i theta G/2)` the shift rule gives
//! `d<Z>/d theta = (<Z>(theta + pi/2) - <Z>(theta - pi/2)) / 2` exactly; slots
//! shared between several gates accumulate one such term per occurrence.

use std::f64::consts::FRAC_PI_2;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::circuit::{check_norm, Op, Vqc};
use crate::error::{Error, Result};

/// A labelled input the loss is evaluated on.
pub trait Example {
    fn input(&self) -> &[f64];
    fn target(&self) -> f64;
}

impl Example for (Vec<f64>, f64) {
    fn input(&self) -> &[f64] {
        &self.0
    }
    fn target(&self) -> f64 {
        self.1
    }
}

impl<E: Example + ?Sized> Example for &E {
    fn input(&self) -> &[f64] {
        (**self).input()
    }
    fn target(&self) -> f64 {
        (**self).target()
    }
}

/// `dL/d theta` for every parameter slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientVector(pub Vec<f64>);

impl Deref for GradientVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl GradientVector {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn non_empty<E>(batch: &[E]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    Ok(())
}

/// Mean squared error over `batch`.
pub fn mse_loss<E: Example>(model: &Vqc, params: &[f64], batch: &[E]) -> Result<f64> {
    non_empty(batch)?;
    let mut total = 0.0;
    for ex in batch {
        let r = model.forward(params, ex.input())? - ex.target();
        total += r * r;
    }
    Ok(total / batch.len() as f64)
}

/// Prediction and `d prediction / d theta` for one input.
pub fn prediction_gradient(model: &Vqc, params: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>)> {
    model.check_params(params)?;
    let ops = model.ansatz().ops();
    let q = model.measured_qubit();

    // State just before each rotation, so shifted runs only replay the suffix.
    let mut state = model.encoder().encode(x)?;
    let mut snapshots = Vec::new();
    for (k, op) in ops.iter().enumerate() {
        if matches!(op, Op::Rotation { .. }) {
            snapshots.push((k, state.clone()));
        }
        state.apply(&op.bind(params))?;
    }
    check_norm(&state)?;
    let pred = 0.5 * (1.0 + state.expectation_z(q)?);

    let mut grad = vec![0.0; params.len()];
    for (k, before) in snapshots {
        let Op::Rotation { axis, target, slot } = ops[k] else {
            unreachable!()
        };
        let mut shifted = [0.0; 2];
        for (out, shift) in shifted.iter_mut().zip([FRAC_PI_2, -FRAC_PI_2]) {
            let mut s = before.clone();
            s.apply(&axis.gate(target, params[slot] + shift))?;
            for op in &ops[k + 1..] {
                s.apply(&op.bind(params))?;
            }
            *out = s.expectation_z(q)?;
        }
        // d pred = d<Z>/2, d<Z> = (z+ - z-)/2
        grad[slot] += 0.25 * (shifted[0] - shifted[1]);
    }
    if !pred.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric("non-finite prediction or gradient".into()));
    }
    Ok((pred, grad))
}

/// Gradient of [`mse_loss`] by the parameter-shift rule. Costs
/// `2 * n_rotations` partial circuit replays per example; per-example terms
/// are summed in batch order.
pub fn parameter_shift_grad<E: Example>(
    model: &Vqc,
    params: &[f64],
    batch: &[E],
) -> Result<GradientVector> {
    Ok(loss_and_grad(model, params, batch)?.1)
}

/// Batch loss together with its parameter-shift gradient.
pub fn loss_and_grad<E: Example>(
    model: &Vqc,
    params: &[f64],
    batch: &[E],
) -> Result<(f64, GradientVector)> {
    non_empty(batch)?;
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    for ex in batch {
        let (pred, dpred) = prediction_gradient(model, params, ex.input())?;
        let r = pred - ex.target();
        loss += r * r * scale;
        for (g, d) in grad.iter_mut().zip(dpred) {
            *g += 2.0 * r * d * scale;
        }
    }
    Ok((loss, GradientVector(grad)))
}

/// Central differences `(L(theta + h e_k) - L(theta - h e_k)) / 2h`.
pub fn finite_difference_grad<E: Example>(
    model: &Vqc,
    params: &[f64],
    batch: &[E],
    h: f64,
) -> Result<GradientVector> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::Config(format!("finite-difference step {h} outside [1e-7, 1e-3]")));
    }
    model.check_params(params)?;
    central_difference(|p| mse_loss(model, p, batch), params, h).map(GradientVector)
}

pub(crate) fn central_difference<F>(mut f: F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut work = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        work[k] = params[k] + h;
        let up = f(&work)?;
        work[k] = params[k] - h;
        let down = f(&work)?;
        work[k] = params[k];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Axis, ParamCircuit, VqcDesign};
    use crate::encoding::{EncoderKind, EncoderSpec};
    use std::f64::consts::PI;

    fn amp_design(layers: usize) -> VqcDesign {
        VqcDesign {
            encoder: EncoderKind::Amplitude,
            input_dim: 2,
            ansatz_layers: layers,
            measured_qubit: 0,
            entangler: Default::default(),
        }
    }

    // RY(theta) followed by RZ(phi) on |0>: RZ does not change <Z>, so with
    // phi = 0 this is the single-RY model.
    #[test]
    fn single_ry_analytic_points() {
        let model = amp_design(1).build().unwrap();
        let batch = vec![(vec![1.0, 0.0], 0.5)];

        let g0 = parameter_shift_grad(&model, &[0.0, 0.0], &batch).unwrap();
        assert!(g0.iter().all(|g| g.abs() < 1e-12));
        let fd = finite_difference_grad(&model, &[0.0, 0.0], &batch, 1e-5).unwrap();
        assert!(fd.iter().all(|g| g.abs() < 1e-8));

        let (loss, g) = loss_and_grad(&model, &[PI / 2.0, 0.0], &batch).unwrap();
        assert!(loss < 1e-24);
        assert!(g.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn analytic_derivative_off_optimum() {
        // pred = (1 + cos theta)/2, L = (pred - y)^2, dL = -(pred - y) sin theta
        let model = amp_design(1).build().unwrap();
        let (theta, y) = (0.8_f64, 0.2);
        let g = parameter_shift_grad(&model, &[theta, 0.3], &[(vec![1.0, 0.0], y)]).unwrap();
        let pred = 0.5 * (1.0 + theta.cos());
        assert!((g[0] + (pred - y) * theta.sin()).abs() < 1e-12);
        assert!(g[1].abs() < 1e-12);
    }

    #[test]
    fn shared_slots_accumulate() {
        let circuit = ParamCircuit::new(
            1,
            vec![
                Op::Rotation { axis: Axis::Y, target: 0, slot: 0 },
                Op::Rotation { axis: Axis::Y, target: 0, slot: 0 },
            ],
        )
        .unwrap();
        assert_eq!(circuit.n_params(), 1);
        let encoder = EncoderSpec::new(EncoderKind::Amplitude, 2).unwrap();
        let shared = Vqc::custom(encoder, circuit, 0).unwrap();
        // RY(t) RY(t) = RY(2t), so d/dt is twice the single-gate derivative at 2t.
        let single = amp_design(1).build().unwrap();
        let (theta, x) = (0.35, [0.6, 0.8]);
        let (p1, one) = prediction_gradient(&single, &[2.0 * theta, 0.0], &x).unwrap();
        let (p2, two) = prediction_gradient(&shared, &[theta], &x).unwrap();
        assert!((p1 - p2).abs() < 1e-12);
        assert!((two[0] - 2.0 * one[0]).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_is_linear_in_loss() {
        let model = amp_design(2).build().unwrap();
        let params = [0.1, 0.5, -0.4, 0.9];
        let batch = vec![(vec![0.3, -0.7], 0.4), (vec![-0.2, 0.5], 0.7)];
        let g = finite_difference_grad(&model, &params, &batch, 1e-5).unwrap();
        let doubled =
            central_difference(|p| Ok(2.0 * mse_loss(&model, p, &batch)?), &params, 1e-5).unwrap();
        for (a, b) in g.iter().zip(doubled) {
            assert!((2.0 * a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_inputs() {
        let model = amp_design(1).build().unwrap();
        let empty: Vec<(Vec<f64>, f64)> = vec![];
        assert!(parameter_shift_grad(&model, &[0.0, 0.0], &empty).is_err());
        let batch = vec![(vec![1.0, 0.0], 0.5)];
        assert!(finite_difference_grad(&model, &[0.0, 0.0], &batch, 1e-2).is_err());
        assert!(parameter_shift_grad(&model, &[0.0], &batch).is_err());
        let degenerate = vec![(vec![0.0, 0.0], 0.5)];
        assert!(matches!(
            parameter_shift_grad(&model, &[0.0, 0.0], &degenerate),
            Err(Error::Encoding(_))
        ));
    }
}
