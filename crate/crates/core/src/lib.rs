//! Approximability benchmarking for variational quantum circuits.
//!
//! A design (encoder, hardware-efficient ansatz, Z measurement) is trained
//! on groups of synthetic polynomial regression datasets whose maximum
//! degree grows with the group index. Per group, the mean of
//! `0.5 * (1 - RMSE) + 0.5 * R^2` over the group's datasets is the design's
//! approximability score; a least-squares linear baseline scored the same way
//! gives the group's nonlinearity (NL) metric.
//!
//! Layers, bottom up: [`simulator`], [`encoding`], [`circuit`],
//! [`gradient`], [`datagen`], [`trainer`], [`metrics`], and the [`bench`]
//! orchestrator with its report emitters.

pub mod bench;
pub mod circuit;
pub mod datagen;
pub mod encoding;
pub mod error;
pub mod gradient;
pub mod metrics;
pub mod simulator;
pub mod trainer;

pub use circuit::{build_ansatz, Entangler, ParamCircuit, Vqc, VqcDesign};
pub use datagen::{DataProfile, Dataset, DatasetGroup, PolynomialSpec, Sample};
pub use encoding::{EncoderKind, EncoderSpec};
pub use error::{Error, Result};
pub use metrics::{approximability_score, EvalScores, GroupScore};
pub use simulator::{Gate, StateVector};
pub use trainer::{TrainConfig, TrainHistory};

/// Toolkit version recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
