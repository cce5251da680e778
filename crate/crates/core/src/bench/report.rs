use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BenchConfig;
use crate::error::{Error, Result};
use crate::metrics::{EvalScores, GroupScore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Ok {
        rmse: f64,
        r2: f64,
        approximability: f64,
        initial_train_loss: f64,
        final_train_loss: f64,
    },
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub dataset: usize,
    /// SHA-256 of the dataset files the cell trained and tested on.
    pub dataset_digest: String,
    pub cache_key: String,
    pub outcome: CellOutcome,
}

impl CellRecord {
    pub fn scores(&self) -> Option<EvalScores> {
        match self.outcome {
            CellOutcome::Ok { rmse, r2, approximability, .. } => Some(EvalScores { rmse, r2, approximability }),
            CellOutcome::Error { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub seed: u64,
    /// Absent when any cell of this seed failed.
    pub score: Option<GroupScore>,
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub group: usize,
    pub degree: u32,
    /// Seed-averaged group approximability over the seeds without failures.
    pub mean_approximability: Option<f64>,
    pub nl_metric: f64,
    pub per_seed: Vec<SeedEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub design: String,
    pub profile: String,
    pub encoder: String,
    pub n_qubits: usize,
    pub n_params: usize,
    pub depth: usize,
    pub groups: Vec<GroupEntry>,
}

impl ReportRow {
    pub fn group(&self, index: usize) -> Option<&GroupEntry> {
        self.groups.iter().find(|g| g.group == index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedNl {
    pub seed: u64,
    pub nl_metric: f64,
    pub per_dataset: Vec<EvalScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlEntry {
    pub profile: String,
    pub input_dim: usize,
    pub group: usize,
    pub degree: u32,
    /// Seed-averaged linear-baseline approximability.
    pub nl_metric: f64,
    pub per_seed: Vec<SeedNl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub toolkit_version: String,
    pub aggregation: String,
    pub config: BenchConfig,
    pub nl_metrics: Vec<NlEntry>,
    pub rows: Vec<ReportRow>,
    /// Number of failed cells.
    pub errors: usize,
}

impl BenchReport {
    pub fn row(&self, design: &str, profile: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.design == design && r.profile == profile)
    }

    pub fn nl(&self, profile: &str, group: usize) -> Option<&NlEntry> {
        self.nl_metrics.iter().find(|e| e.profile == profile && e.group == group)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// One row per `(design, profile, group, seed)`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "design", "profile", "encoder", "qubits", "params", "depth", "group", "degree", "seed",
            "approximability", "rmse", "r2", "nl_metric", "datasets", "errors",
        ])?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for row in &self.rows {
            for g in &row.groups {
                for s in &g.per_seed {
                    let ok: Vec<EvalScores> = s.cells.iter().filter_map(|c| c.scores()).collect();
                    let failed = s.cells.len() - ok.len();
                    let avg = |f: fn(&EvalScores) -> f64| {
                        (failed == 0).then(|| ok.iter().map(f).sum::<f64>() / ok.len() as f64)
                    };
                    let nl = self.nl(&row.profile, g.group).and_then(|e| e.per_seed.iter().find(|n| n.seed == s.seed));
                    w.write_record([
                        row.design.clone(),
                        row.profile.clone(),
                        row.encoder.clone(),
                        row.n_qubits.to_string(),
                        row.n_params.to_string(),
                        row.depth.to_string(),
                        g.group.to_string(),
                        g.degree.to_string(),
                        s.seed.to_string(),
                        opt(s.score.as_ref().map(|sc| sc.mean_approximability)),
                        opt(avg(|e| e.rmse)),
                        opt(avg(|e| e.r2)),
                        opt(nl.map(|n| n.nl_metric)),
                        s.cells.len().to_string(),
                        failed.to_string(),
                    ])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Grid of seed-averaged group scores, plus the NL metric table.
    pub fn to_markdown(&self) -> String {
        let groups: BTreeSet<usize> = self.rows.iter().flat_map(|r| r.groups.iter().map(|g| g.group)).collect();
        let mut out = String::new();
        let mut header = String::from("| Qubits | Params | Depth | Encoder | Dataset |");
        let mut rule = String::from("|---:|---:|---:|---|---|");
        for g in &groups {
            let _ = write!(header, " G{g} |");
            rule.push_str("---:|");
        }
        let _ = writeln!(out, "{header}\n{rule}");
        for row in &self.rows {
            let _ = write!(
                out,
                "| {} | {} | {} | {} | {} |",
                row.n_qubits, row.n_params, row.depth, row.encoder, row.profile
            );
            for g in &groups {
                let cell = match row.group(*g) {
                    None => "-".to_string(),
                    Some(e) => match e.mean_approximability {
                        Some(v) => format!("{v:.3}"),
                        None => "ERR".to_string(),
                    },
                };
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }

        let nl_groups: BTreeSet<usize> = self.nl_metrics.iter().map(|e| e.group).collect();
        let _ = write!(out, "\nNL metric (linear baseline)\n\n| Dataset | Input | Output |");
        let mut rule = String::from("|---|---:|---:|");
        for g in &nl_groups {
            let _ = write!(out, " G{g} |");
            rule.push_str("---:|");
        }
        let _ = writeln!(out, "\n{rule}");
        for prof in &self.config.profiles {
            let _ = write!(out, "| {} | {} | 1 |", prof.name, prof.input_dim);
            for g in &nl_groups {
                let cell = self.nl(&prof.name, *g).map(|e| format!("{:.3}", e.nl_metric)).unwrap_or_else(|| "-".into());
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\nScores are 0.5*(1-RMSE) + 0.5*R^2 on the test split ({}). {} failed cell(s). vqc-bench {}.",
            self.aggregation, self.errors, self.toolkit_version
        );
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" | "markdown-table" => Ok(ReportFormat::Markdown),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

/// Writes `<dir>/report.<ext>` and returns its path.
pub fn emit_report(report: &BenchReport, format: ReportFormat, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let body = match format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Csv => report.to_csv()?,
        ReportFormat::Markdown => report.to_markdown(),
    };
    let path = dir.join(format!("report.{}", format.extension()));
    std::fs::write(&path, body)?;
    Ok(path)
}
