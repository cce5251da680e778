//! Benchmark orchestration: dataset generation per `(profile, seed)`, one
//! training cell per `(design, profile, seed, group, dataset)`, and
//! aggregation into a [`BenchReport`].
//!
//! Cells run in parallel on a pool of `workers` threads. Every cell's seeds
//! derive from its coordinates and results are gathered in a fixed order, so
//! reports do not depend on the worker count.

mod config;
mod curves;
mod report;

use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{BenchConfig, DesignEntry, OUT_DIR_ENV};
pub use curves::{export_curves, write_curves_csv, CurvePoint};
pub use report::{emit_report, BenchReport, CellOutcome, CellRecord, GroupEntry, NlEntry, ReportFormat, ReportRow, SeedEntry, SeedNl};

use crate::datagen::{dataset_rng, generate_group, Dataset, DatasetGroup};
use crate::error::{Error, Result};
use crate::metrics::{group_score, linear_baseline_scores, GroupScore};
use crate::trainer::{evaluate, initial_params, train_from, TrainConfig, TrainHistory};
use crate::VERSION;

/// Coordinates of one training cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub design: String,
    pub profile: String,
    pub seed: u64,
    pub group: usize,
    pub dataset: usize,
}

/// Replaces a cell's initial parameters; used to inject faults.
pub type InitOverride<'a> = dyn Fn(&CellKey, &[f64]) -> Option<Vec<f64>> + Sync + 'a;

#[derive(Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
    /// Cell cache directory. Completed cells whose cache key matches are
    /// reused instead of retrained.
    pub cache_dir: Option<PathBuf>,
}

/// Groups generated for every `(profile, seed)`, indexed
/// `[profile][seed][group]` in config order.
pub struct GeneratedData {
    pub groups: Vec<Vec<Vec<DatasetGroup>>>,
}

/// Pool of `workers` threads; 0 uses one per core.
pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

pub fn generate_all(config: &BenchConfig, pool: &rayon::ThreadPool) -> Result<GeneratedData> {
    let jobs: Vec<(usize, usize, usize)> = config
        .profiles
        .iter()
        .enumerate()
        .flat_map(|(p, prof)| {
            (0..config.seeds.len()).flat_map(move |s| (0..prof.groups.len()).map(move |g| (p, s, g)))
        })
        .collect();
    let built: Vec<DatasetGroup> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, s, g)| {
                let prof = &config.profiles[p];
                generate_group(prof, p as u16, prof.groups[g], config.seeds[s])
            })
            .collect::<Result<_>>()
    })?;
    let mut it = built.into_iter();
    let groups = config
        .profiles
        .iter()
        .map(|prof| {
            (0..config.seeds.len())
                .map(|_| it.by_ref().take(prof.groups.len()).collect())
                .collect()
        })
        .collect();
    Ok(GeneratedData { groups })
}

/// Writes every generated dataset as
/// `<dir>/<profile>/seed-<s>/G<x>/ds-<i>.{csv,json}`.
pub fn write_datasets(config: &BenchConfig, data: &GeneratedData, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (prof, per_seed) in config.profiles.iter().zip(&data.groups) {
        for (seed, groups) in config.seeds.iter().zip(per_seed) {
            for group in groups {
                let sub = dir
                    .join(&prof.name)
                    .join(format!("seed-{seed}"))
                    .join(format!("G{}", group.group_index));
                for (i, ds) in group.datasets.iter().enumerate() {
                    let (csv, json) = ds.save(&sub, &format!("ds-{i}"))?;
                    written.push(csv);
                    written.push(json);
                }
            }
        }
    }
    Ok(written)
}

/// Training seed of a cell, shared by every design on that dataset.
pub fn cell_train_seed(train: &TrainConfig, master_seed: u64, profile_slot: u16, group: usize, dataset: usize) -> u64 {
    dataset_rng(master_seed ^ train.seed.rotate_left(32), profile_slot, group, dataset, 0xffff).next_u64()
}

fn cache_key(entry: &DesignEntry, input_dim: usize, cfg: &TrainConfig, dataset_digest: &str) -> Result<String> {
    #[derive(Serialize)]
    struct Key<'a> {
        version: &'a str,
        design: crate::circuit::VqcDesign,
        train: &'a TrainConfig,
        dataset: &'a str,
    }
    let key = Key { version: VERSION, design: entry.design_for(input_dim), train: cfg, dataset: dataset_digest };
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(&key)?)))
}

struct CellTask<'a> {
    key: CellKey,
    entry: &'a DesignEntry,
    dataset: &'a Dataset,
    digest: String,
    train: TrainConfig,
}

fn run_cell(task: &CellTask, hook: Option<&InitOverride<'_>>) -> Result<(TrainHistory, CellOutcome)> {
    let model = task.entry.build_for(task.dataset.input_dim())?;
    let mut params = initial_params(model.n_params(), &task.train);
    if let Some(replacement) = hook.and_then(|h| h(&task.key, &params)) {
        params = replacement;
    }
    let history = train_from(&model, task.dataset, &task.train, params)?;
    let scores = evaluate(&model, &history.final_params, &task.dataset.test)?;
    if !(scores.rmse.is_finite() && scores.r2.is_finite()) {
        return Err(Error::Numeric("non-finite test scores".into()));
    }
    let outcome = CellOutcome::Ok {
        rmse: scores.rmse,
        r2: scores.r2,
        approximability: scores.approximability,
        initial_train_loss: history.initial_loss,
        final_train_loss: history.final_loss(),
    };
    Ok((history, outcome))
}

fn cell_outcome(task: &CellTask, hook: Option<&InitOverride<'_>>, cache: Option<&Path>, cache_key: &str) -> CellOutcome {
    let cached = cache.map(|dir| dir.join(format!("{cache_key}.json")));
    if let Some(path) = &cached {
        if let Ok(text) = std::fs::read_to_string(path) {
            if let Ok(outcome @ CellOutcome::Ok { .. }) = serde_json::from_str::<CellOutcome>(&text) {
                return outcome;
            }
        }
    }
    let outcome = match run_cell(task, hook) {
        Ok((_, outcome)) => outcome,
        Err(e) => CellOutcome::Error { message: e.to_string() },
    };
    // Failed cells are never cached so a rerun retries them.
    if let (Some(path), CellOutcome::Ok { .. }) = (&cached, &outcome) {
        if let Ok(text) = serde_json::to_string(&outcome) {
            let _ = std::fs::write(path, text);
        }
    }
    outcome
}

pub fn run_benchmark(config: &BenchConfig, opts: &RunOptions) -> Result<BenchReport> {
    run_benchmark_with(config, opts, None)
}

/// Like [`run_benchmark`], with an optional hook that may replace the
/// initial parameters of individual cells.
pub fn run_benchmark_with(config: &BenchConfig, opts: &RunOptions, hook: Option<&InitOverride<'_>>) -> Result<BenchReport> {
    config.validate()?;
    let pool = thread_pool(opts.workers)?;
    if let Some(dir) = &opts.cache_dir {
        std::fs::create_dir_all(dir)?;
    }
    let data = generate_all(config, &pool)?;

    let digests: Vec<Vec<Vec<Vec<String>>>> = data
        .groups
        .iter()
        .map(|per_seed| {
            per_seed
                .iter()
                .map(|groups| {
                    groups
                        .iter()
                        .map(|g| g.datasets.iter().map(Dataset::digest).collect::<Result<_>>())
                        .collect::<Result<_>>()
                })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;

    let mut tasks = Vec::new();
    for entry in &config.designs {
        for (p, prof) in config.profiles_for(entry) {
            // Same order as `assemble`: group, then seed, then dataset.
            for g in 0..prof.groups.len() {
                for (s, &seed) in config.seeds.iter().enumerate() {
                    let group = &data.groups[p][s][g];
                    for (i, dataset) in group.datasets.iter().enumerate() {
                        let train = TrainConfig {
                            seed: cell_train_seed(&config.train, seed, p as u16, group.group_index, i),
                            ..config.train.clone()
                        };
                        tasks.push(CellTask {
                            key: CellKey {
                                design: entry.label.clone(),
                                profile: prof.name.clone(),
                                seed,
                                group: group.group_index,
                                dataset: i,
                            },
                            entry,
                            dataset,
                            digest: digests[p][s][g][i].clone(),
                            train,
                        });
                    }
                }
            }
        }
    }

    let cache = opts.cache_dir.as_deref();
    let records: Vec<CellRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|task| {
                let key = cache_key(task.entry, task.dataset.input_dim(), &task.train, &task.digest)?;
                let outcome = cell_outcome(task, hook, cache, &key);
                Ok(CellRecord {
                    dataset: task.key.dataset,
                    dataset_digest: task.digest.clone(),
                    cache_key: key,
                    outcome,
                })
            })
            .collect::<Result<_>>()
    })?;

    let nl = nl_entries(config, &data)?;
    assemble(config, &data, &nl, records)
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn nl_entries(config: &BenchConfig, data: &GeneratedData) -> Result<Vec<NlEntry>> {
    let mut out = Vec::new();
    for (p, prof) in config.profiles.iter().enumerate() {
        for (g, &group_index) in prof.groups.iter().enumerate() {
            let mut per_seed = Vec::new();
            for (s, &seed) in config.seeds.iter().enumerate() {
                let scores = linear_baseline_scores(&data.groups[p][s][g])?;
                per_seed.push(SeedNl { seed, nl_metric: group_score(&scores)?, per_dataset: scores });
            }
            out.push(NlEntry {
                profile: prof.name.clone(),
                input_dim: prof.input_dim,
                group: group_index,
                degree: 2 * group_index as u32,
                nl_metric: mean(per_seed.iter().map(|s| s.nl_metric)).expect("validated: at least one seed"),
                per_seed,
            });
        }
    }
    Ok(out)
}

fn assemble(config: &BenchConfig, data: &GeneratedData, nl: &[NlEntry], records: Vec<CellRecord>) -> Result<BenchReport> {
    let mut records = records.into_iter();
    let mut rows = Vec::new();
    for entry in &config.designs {
        for (p, prof) in config.profiles_for(entry) {
            let model = entry.build_for(prof.input_dim)?;
            let mut groups = Vec::new();
            for (g, &group_index) in prof.groups.iter().enumerate() {
                let nl_entry = nl
                    .iter()
                    .find(|e| e.profile == prof.name && e.group == group_index)
                    .expect("nl entry for every profile group");
                let mut per_seed = Vec::new();
                for (s, &seed) in config.seeds.iter().enumerate() {
                    let n = data.groups[p][s][g].datasets.len();
                    let cells: Vec<CellRecord> = records.by_ref().take(n).collect();
                    let scores: Vec<_> = cells.iter().filter_map(CellRecord::scores).collect();
                    let score = if scores.len() == n {
                        Some(GroupScore {
                            group_index,
                            mean_approximability: group_score(&scores)?,
                            per_dataset: scores,
                            nl_metric: nl_entry.per_seed[s].nl_metric,
                        })
                    } else {
                        None
                    };
                    per_seed.push(SeedEntry { seed, score, cells });
                }
                groups.push(GroupEntry {
                    group: group_index,
                    degree: 2 * group_index as u32,
                    mean_approximability: mean(
                        per_seed.iter().filter_map(|s| s.score.as_ref().map(|g| g.mean_approximability)),
                    ),
                    nl_metric: nl_entry.nl_metric,
                    per_seed,
                });
            }
            rows.push(ReportRow {
                design: entry.label.clone(),
                profile: prof.name.clone(),
                encoder: entry.encoder.label(),
                n_qubits: model.n_qubits(),
                n_params: model.n_params(),
                depth: model.depth(),
                groups,
            });
        }
    }
    let errors = rows
        .iter()
        .flat_map(|r| &r.groups)
        .flat_map(|g| &g.per_seed)
        .flat_map(|s| &s.cells)
        .filter(|c| matches!(c.outcome, CellOutcome::Error { .. }))
        .count();
    Ok(BenchReport {
        toolkit_version: VERSION.to_string(),
        aggregation: "mean over datasets per seed, then mean over seeds".into(),
        config: config.clone(),
        nl_metrics: nl.to_vec(),
        rows,
        errors,
    })
}

/// Trains `label` on dataset 0 of every group of each single-input profile
/// (first seed) and writes `<dir>/<label>-<profile>-G<x>.csv` curves plus
/// a matching `.loss.csv` training history.
pub fn curves_for_design(config: &BenchConfig, label: &str, n_points: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let entry = config
        .design(label)
        .ok_or_else(|| Error::Config(format!("no design labelled {label:?}")))?;
    let seed = config.seeds[0];
    let mut written = Vec::new();
    let mut any = false;
    for (p, prof) in config.profiles_for(entry) {
        if prof.input_dim != 1 {
            continue;
        }
        any = true;
        std::fs::create_dir_all(dir)?;
        let model = entry.build_for(prof.input_dim)?;
        for &group_index in &prof.groups {
            let ds = crate::datagen::generate_group_dataset(prof, p as u16, group_index, 0, seed)?;
            let train = TrainConfig {
                seed: cell_train_seed(&config.train, seed, p as u16, group_index, 0),
                ..config.train.clone()
            };
            let history = crate::trainer::train(&model, &ds, &train)?;
            let points = export_curves(&model, &history.final_params, &ds, n_points)?;
            let stem = format!("{label}-{}-G{group_index}", prof.name);
            let path = dir.join(format!("{stem}.csv"));
            write_curves_csv(&points, std::fs::File::create(&path)?)?;
            let loss = dir.join(format!("{stem}.loss.csv"));
            std::fs::write(&loss, history.to_csv()?)?;
            written.push(path);
            written.push(loss);
        }
    }
    if !any {
        return Err(Error::UnsupportedProfile(format!(
            "design {label:?} has no single-input profile to plot"
        )));
    }
    Ok(written)
}
