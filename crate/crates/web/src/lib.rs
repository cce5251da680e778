//! Browser front end: three operations exported through `wasm-bindgen`,
//! each returning a JSON string for `www/index.html` to plot.
//!
//! The `*_json` wrappers are thin; the work happens in the plain functions
//! below, which are also what the native tests call.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use vqc_bench::bench::export_curves;
use vqc_bench::datagen::{generate_group, generate_group_dataset, DataProfile};
use vqc_bench::metrics::nl_metric;
use vqc_bench::trainer::{evaluate, train, TrainConfig};
use vqc_bench::{EncoderKind, Result, VqcDesign};

const MAX_EPOCHS: usize = 500;
const MAX_POINTS: usize = 2000;

#[derive(Debug, Serialize)]
pub struct Preview {
    pub degree: u32,
    pub curve_x: Vec<f64>,
    pub curve_y: Vec<f64>,
    pub train_x: Vec<f64>,
    pub train_y: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Fit {
    pub encoder: String,
    pub n_qubits: usize,
    pub n_params: usize,
    pub x: Vec<f64>,
    pub y_true: Vec<f64>,
    pub y_pred: Vec<f64>,
    pub losses: Vec<f64>,
    pub rmse: f64,
    pub r2: f64,
    pub score: f64,
}

#[derive(Debug, Serialize)]
pub struct NlRow {
    pub group: usize,
    pub degree: u32,
    pub nl_metric: f64,
}

fn one_input(samples: usize) -> DataProfile {
    DataProfile { samples_per_dataset: samples, datasets_per_group: 1, ..DataProfile::new("demo", 1) }
}

pub fn parse_encoder(name: &str) -> Option<EncoderKind> {
    match name {
        "amplitude" => Some(EncoderKind::Amplitude),
        "angle" => Some(EncoderKind::Angle),
        "stvqc1" => Some(EncoderKind::StVqc { duplications: 1 }),
        "stvqc2" => Some(EncoderKind::StVqc { duplications: 2 }),
        _ => None,
    }
}

fn check_range(what: &str, v: usize, max: usize) -> Result<()> {
    if v == 0 || v > max {
        return Err(vqc_bench::Error::Config(format!("{what} must be in 1..={max}")));
    }
    Ok(())
}

/// Normalized target curve of a random one-input polynomial from group `group`.
pub fn preview(group: usize, seed: u64, n_points: usize) -> Result<Preview> {
    check_range("n_points", n_points, MAX_POINTS)?;
    let ds = generate_group_dataset(&one_input(200), 0, group, 0, seed)?;
    // Any model will do; only the grid and the true curve are used.
    let model = flat().build()?;
    let pts = export_curves(&model, &vec![0.0; model.n_params()], &ds, n_points)?;
    Ok(Preview {
        degree: ds.spec.max_degree,
        curve_x: pts.iter().map(|p| p.x).collect(),
        curve_y: pts.iter().map(|p| p.y_true_norm).collect(),
        train_x: ds.train.iter().map(|s| s.x[0]).collect(),
        train_y: ds.train.iter().map(|s| s.y_norm).collect(),
    })
}

fn flat() -> VqcDesign {
    VqcDesign {
        encoder: EncoderKind::Angle,
        input_dim: 1,
        ansatz_layers: 1,
        measured_qubit: 0,
        entangler: Default::default(),
    }
}

/// Trains a one-input model on the group-`group` polynomial of `seed` and
/// returns its fitted curve, loss history and test scores.
pub fn fit(encoder: &str, layers: usize, group: usize, seed: u64, epochs: usize, n_points: usize) -> Result<Fit> {
    let kind = parse_encoder(encoder)
        .ok_or_else(|| vqc_bench::Error::Config(format!("unknown encoder {encoder:?}")))?;
    check_range("layers", layers, 20)?;
    check_range("epochs", epochs, MAX_EPOCHS)?;
    check_range("n_points", n_points, MAX_POINTS)?;
    let ds = generate_group_dataset(&one_input(200), 0, group, 0, seed)?;
    let model = VqcDesign { encoder: kind, ansatz_layers: layers, ..flat() }.build()?;
    let cfg = TrainConfig { epochs, seed, ..TrainConfig::default() };
    let h = train(&model, &ds, &cfg)?;
    let scores = evaluate(&model, &h.final_params, &ds.test)?;
    let pts = export_curves(&model, &h.final_params, &ds, n_points)?;
    let mut losses = vec![h.initial_loss];
    losses.extend(&h.epoch_losses);
    Ok(Fit {
        encoder: kind.label(),
        n_qubits: model.n_qubits(),
        n_params: model.n_params(),
        x: pts.iter().map(|p| p.x).collect(),
        y_true: pts.iter().map(|p| p.y_true_norm).collect(),
        y_pred: pts.iter().map(|p| p.y_pred).collect(),
        losses,
        rmse: scores.rmse,
        r2: scores.r2,
        score: scores.approximability,
    })
}

/// NL metric of groups G1..G4 for `input_dim` inputs.
pub fn nl_table(input_dim: usize, datasets: usize, seed: u64) -> Result<Vec<NlRow>> {
    check_range("input_dim", input_dim, 8)?;
    check_range("datasets", datasets, 20)?;
    let profile = DataProfile { datasets_per_group: datasets, ..DataProfile::new("demo", input_dim) };
    profile
        .groups
        .iter()
        .map(|&g| {
            let group = generate_group(&profile, 0, g, seed)?;
            Ok(NlRow { group: g, degree: group.degree, nl_metric: nl_metric(&group)? })
        })
        .collect()
}

fn to_js<T: Serialize>(r: Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn preview_json(group: usize, seed: u64, n_points: usize) -> Result<String, JsError> {
    to_js(preview(group, seed, n_points))
}

#[wasm_bindgen]
pub fn fit_json(encoder: &str, layers: usize, group: usize, seed: u64, epochs: usize, n_points: usize) -> Result<String, JsError> {
    to_js(fit(encoder, layers, group, seed, epochs, n_points))
}

#[wasm_bindgen]
pub fn nl_table_json(input_dim: usize, datasets: usize, seed: u64) -> Result<String, JsError> {
    to_js(nl_table(input_dim, datasets, seed))
}
