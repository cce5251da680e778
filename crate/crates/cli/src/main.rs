use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use vqc_bench::bench::{
    self, curves_for_design, emit_report, run_benchmark, BenchConfig, BenchReport, ReportFormat, RunOptions,
    OUT_DIR_ENV,
};

#[derive(Parser)]
#[command(name = "bench", version, about = "Approximability benchmarks for variational quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every design on every dataset and write report.{json,csv,md}.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Output directory; overrides VQC_BENCH_OUT and the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Retrain every cell instead of reusing <out>/cells.
        #[arg(long)]
        no_cache: bool,
    },
    /// Generate the datasets only, under <out>/data.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one design on each single-input profile and dump plot-ready
    /// curves under <out>/curves.
    Curves {
        #[arg(long)]
        design: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit <out>/report.json in another format.
    Report {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Md,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
            Format::Md => ReportFormat::Markdown,
        }
    }
}

fn load(path: &Path) -> Result<BenchConfig> {
    BenchConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn run(config: &Path, workers: usize, out: Option<&Path>, no_cache: bool) -> Result<()> {
    let cfg = load(config)?;
    let dir = cfg.resolve_output_dir(out);
    let opts = RunOptions { workers, cache_dir: (!no_cache).then(|| dir.join("cells")) };
    let started = Instant::now();
    let report = run_benchmark(&cfg, &opts)?;
    for format in [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown] {
        let path = emit_report(&report, format, &dir).with_context(|| format!("writing to {}", dir.display()))?;
        eprintln!("wrote {}", path.display());
    }
    print!("{}", report.to_markdown());
    eprintln!("{} rows, {} failed cells, {:.1}s", report.rows.len(), report.errors, started.elapsed().as_secs_f64());
    Ok(())
}

fn gen_data(config: &Path, out: Option<&Path>) -> Result<()> {
    let cfg = load(config)?;
    let dir = cfg.resolve_output_dir(out).join("data");
    let pool = vqc_bench::bench::thread_pool(0)?;
    let data = bench::generate_all(&cfg, &pool)?;
    let files = bench::write_datasets(&cfg, &data, &dir)?;
    eprintln!("wrote {} files under {}", files.len(), dir.display());
    Ok(())
}

fn curves(design: &str, config: &Path, points: usize, out: Option<&Path>) -> Result<()> {
    let cfg = load(config)?;
    let dir = cfg.resolve_output_dir(out).join("curves");
    for path in curves_for_design(&cfg, design, points, &dir)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn report(out: Option<&Path>, format: Format) -> Result<()> {
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => match std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            Some(p) => PathBuf::from(p),
            None => PathBuf::from("bench-out"),
        },
    };
    let src = dir.join("report.json");
    if !src.exists() {
        bail!("no report at {}; run `bench run` first", src.display());
    }
    let report = BenchReport::load(&src).with_context(|| format!("reading {}", src.display()))?;
    let path = emit_report(&report, format.into(), &dir)?;
    if matches!(format, Format::Md) {
        print!("{}", report.to_markdown());
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, workers, out, no_cache } => run(config, *workers, out.as_deref(), *no_cache),
        Command::GenData { config, out } => gen_data(config, out.as_deref()),
        Command::Curves { design, config, points, out } => curves(design, config, *points, out.as_deref()),
        Command::Report { out, format } => report(out.as_deref(), *format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
