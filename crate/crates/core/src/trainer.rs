//! Mini-batch training of a VQC on one dataset and test-split evaluation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Vqc;
use crate::datagen::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::gradient::{loss_and_grad, mse_loss};
use crate::metrics::EvalScores;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Initial parameters are uniform on `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            learning_rate: 0.05,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("train config: {m}")));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return bad("init_scale must be non-negative");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.epsilon > 0.0) {
            return bad("Adam hyperparameters out of range");
        }
        Ok(())
    }
}

/// First-order optimizer state.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam(Adam),
}

impl Optimizer {
    pub fn new(cfg: &TrainConfig, n_params: usize) -> Self {
        match cfg.optimizer {
            OptimizerKind::Sgd => Optimizer::Sgd { lr: cfg.learning_rate },
            OptimizerKind::Adam => Optimizer::Adam(Adam {
                lr: cfg.learning_rate,
                beta1: cfg.beta1,
                beta2: cfg.beta2,
                epsilon: cfg.epsilon,
                t: 0,
                m: vec![0.0; n_params],
                v: vec![0.0; n_params],
            }),
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self {
            Optimizer::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= *lr * g;
                }
            }
            Optimizer::Adam(adam) => adam.step(params, grad),
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: u32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, t: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, (p, &g)) in params.iter_mut().zip(grad).enumerate() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Training-split MSE at the initial parameters.
    pub initial_loss: f64,
    /// Training-split MSE after each epoch.
    pub epoch_losses: Vec<f64>,
    pub final_params: Vec<f64>,
    /// Optimizer steps taken.
    pub steps: usize,
}

impl TrainHistory {
    pub fn final_loss(&self) -> f64 {
        *self.epoch_losses.last().unwrap_or(&self.initial_loss)
    }

    /// `epoch,loss` CSV, epoch 0 being the initial loss.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["epoch", "loss"])?;
        for (e, l) in std::iter::once(&self.initial_loss).chain(&self.epoch_losses).enumerate() {
            w.write_record([e.to_string(), l.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn initial_params(n_params: usize, cfg: &TrainConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = cfg.init_scale;
    (0..n_params)
        .map(|_| if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 })
        .collect()
}

fn check_compatible(model: &Vqc, dataset: &Dataset, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    if dataset.input_dim() != model.input_dim() {
        return Err(Error::Shape(format!(
            "dataset has {} inputs, model expects {}",
            dataset.input_dim(),
            model.input_dim()
        )));
    }
    if cfg.batch_size > dataset.train.len() {
        return Err(Error::Config(format!(
            "batch size {} exceeds training split of {}",
            cfg.batch_size,
            dataset.train.len()
        )));
    }
    Ok(())
}

/// Trains from parameters drawn per [`initial_params`].
pub fn train(model: &Vqc, dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainHistory> {
    train_from(model, dataset, cfg, initial_params(model.n_params(), cfg))
}

/// Trains from the given starting parameters. Each epoch reshuffles the
/// training split with a stream derived from `cfg.seed`; the final short
/// batch is kept.
pub fn train_from(
    model: &Vqc,
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut params: Vec<f64>,
) -> Result<TrainHistory> {
    check_compatible(model, dataset, cfg)?;
    model.check_params(&params)?;
    let mut optimizer = Optimizer::new(cfg, params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    let initial_loss = mse_loss(model, &params, &dataset.train)?;
    let mut order: Vec<&Sample> = dataset.train.iter().collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut steps = 0;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (_, grad) = loss_and_grad(model, &params, batch)?;
            optimizer.step(&mut params, &grad);
            steps += 1;
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("parameters diverged".into()));
        }
        epoch_losses.push(mse_loss(model, &params, &dataset.train)?);
    }
    Ok(TrainHistory { initial_loss, epoch_losses, final_params: params, steps })
}

pub fn predict(model: &Vqc, params: &[f64], split: &[Sample]) -> Result<Vec<f64>> {
    split.iter().map(|s| model.forward(params, &s.x)).collect()
}

/// RMSE, R^2 and approximability on `split`, in normalized-target space.
pub fn evaluate(model: &Vqc, params: &[f64], split: &[Sample]) -> Result<EvalScores> {
    if split.is_empty() {
        return Err(Error::Shape("cannot evaluate on an empty split".into()));
    }
    let pred = predict(model, params, split)?;
    let actual: Vec<f64> = split.iter().map(|s| s.y_norm).collect();
    EvalScores::from_predictions(&pred, &actual)
}
