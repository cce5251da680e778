use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::circuit::Vqc;
use crate::datagen::{Dataset, MIN_INPUT_NORM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y_true_norm: f64,
    pub y_pred: f64,
}

/// `n` evenly spaced inputs covering `[-1, -0.1] ∪ [0.1, 1]`.
fn shell_grid(n: usize) -> Vec<f64> {
    let side = 1.0 - MIN_INPUT_NORM;
    let span = 2.0 * side;
    (0..n)
        .map(|k| {
            let t = if n == 1 { 0.0 } else { span * k as f64 / (n - 1) as f64 };
            if t <= side {
                -1.0 + t
            } else {
                // rounding can push the last point past 1
                (MIN_INPUT_NORM + (t - side)).min(1.0)
            }
        })
        .collect()
}

/// Predicted and true (normalized) curves of a single-input dataset.
pub fn export_curves(model: &Vqc, params: &[f64], dataset: &Dataset, n_points: usize) -> Result<Vec<CurvePoint>> {
    if dataset.input_dim() != 1 {
        return Err(Error::UnsupportedProfile(format!(
            "curves need a single-input dataset, got {} inputs",
            dataset.input_dim()
        )));
    }
    if n_points == 0 {
        return Err(Error::Config("n_points must be positive".into()));
    }
    shell_grid(n_points)
        .into_iter()
        .map(|x| {
            let y_true_norm = dataset.scaler.transform(dataset.spec.evaluate(&[x])?);
            let y_pred = model.forward(params, &[x])?;
            Ok(CurvePoint { x, y_true_norm, y_pred })
        })
        .collect()
}

/// `x,y_true_norm,y_pred` CSV.
pub fn write_curves_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
