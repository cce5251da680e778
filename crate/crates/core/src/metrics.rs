//! Regression scores, the approximability score, and the linear-baseline
//! nonlinearity (NL) metric.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datagen::{DatasetGroup, Sample};
use crate::error::{Error, Result};

const RIDGE_JITTER: f64 = 1e-10;

fn same_len(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(Error::Shape(format!(
            "prediction/target lengths {} and {} must match and be non-zero",
            pred.len(),
            actual.len()
        )));
    }
    Ok(())
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    same_len(pred, actual)?;
    let mse = pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum::<f64>()
        / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Coefficient of determination `1 - SS_res / SS_tot`; unbounded below.
pub fn r2(pred: &[f64], actual: &[f64]) -> Result<f64> {
    same_len(pred, actual)?;
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot = actual.iter().map(|a| (a - mean).powi(2)).sum::<f64>();
    if ss_tot == 0.0 {
        return Err(Error::Degenerate("targets have zero variance".into()));
    }
    let ss_res = pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum::<f64>();
    Ok(1.0 - ss_res / ss_tot)
}

/// `0.5 * (1 - rmse) + 0.5 * r2`.
pub fn approximability_score(rmse: f64, r2: f64) -> f64 {
    0.5 * (1.0 - rmse) + 0.5 * r2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalScores {
    pub rmse: f64,
    pub r2: f64,
    pub approximability: f64,
}

impl EvalScores {
    pub fn from_predictions(pred: &[f64], actual: &[f64]) -> Result<Self> {
        let rmse = rmse(pred, actual)?;
        let r2 = r2(pred, actual)?;
        Ok(Self { rmse, r2, approximability: approximability_score(rmse, r2) })
    }
}

/// Arithmetic mean of per-dataset approximability scores.
pub fn group_score(per_dataset: &[EvalScores]) -> Result<f64> {
    if per_dataset.is_empty() {
        return Err(Error::Shape("no scores to aggregate".into()));
    }
    Ok(per_dataset.iter().map(|s| s.approximability).sum::<f64>() / per_dataset.len() as f64)
}

/// Scores of one model on one dataset group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub group_index: usize,
    pub per_dataset: Vec<EvalScores>,
    pub mean_approximability: f64,
    pub nl_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn evaluate(&self, split: &[Sample]) -> Result<EvalScores> {
        let pred: Vec<f64> = split.iter().map(|s| self.predict(&s.x)).collect();
        let actual: Vec<f64> = split.iter().map(|s| s.y_norm).collect();
        EvalScores::from_predictions(&pred, &actual)
    }
}

/// Least squares with intercept on `(x, y_norm)` via the normal equations,
/// with a `1e-10` ridge on the diagonal.
pub fn fit_linear_baseline(train: &[Sample]) -> Result<LinearModel> {
    let d = train.first().map(|s| s.x.len()).unwrap_or(0);
    if train.len() <= d + 1 {
        return Err(Error::Shape(format!(
            "{} samples cannot determine {} linear coefficients",
            train.len(),
            d + 1
        )));
    }
    let design = DMatrix::from_fn(train.len(), d + 1, |i, j| if j == d { 1.0 } else { train[i].x[j] });
    let target = DVector::from_iterator(train.len(), train.iter().map(|s| s.y_norm));
    let mut gram = design.tr_mul(&design);
    for k in 0..=d {
        gram[(k, k)] += RIDGE_JITTER;
    }
    let rhs = design.tr_mul(&target);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numeric("normal equations are not positive definite".into()))?;
    let coef = chol.solve(&rhs);
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric("non-finite least-squares solution".into()));
    }
    Ok(LinearModel { weights: coef.rows(0, d).iter().copied().collect(), intercept: coef[d] })
}

/// Test-split scores of the linear baseline, one per dataset in the group.
pub fn linear_baseline_scores(group: &DatasetGroup) -> Result<Vec<EvalScores>> {
    group
        .datasets
        .iter()
        .map(|ds| fit_linear_baseline(&ds.train)?.evaluate(&ds.test))
        .collect()
}

/// Mean approximability of the linear baseline over the group. Lower values
/// mean stronger nonlinearity.
pub fn nl_metric(group: &DatasetGroup) -> Result<f64> {
    group_score(&linear_baseline_scores(group)?)
}
