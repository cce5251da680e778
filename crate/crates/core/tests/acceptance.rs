//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any failed.
//!
//! Built with `harness = false` so the summary is printed even on success:
//! `cargo test --release -p vqc-bench --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vqc_bench::bench::{
    emit_report, export_curves, run_benchmark, write_datasets, BenchConfig, BenchReport, DesignEntry,
    ReportFormat, RunOptions,
};
use vqc_bench::datagen::{generate_group, generate_group_dataset};
use vqc_bench::gradient::{finite_difference_grad, parameter_shift_grad};
use vqc_bench::metrics::{nl_metric, r2, rmse};
use vqc_bench::trainer::train;
use vqc_bench::{approximability_score, DataProfile, EncoderKind, StateVector, TrainConfig, VqcDesign};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut worst = 0.0f64;
    let mut seen = BTreeMap::new();
    for case in 0..50 {
        let (kind, widths): (EncoderKind, &[usize]) = match case % 4 {
            0 => (EncoderKind::Amplitude, &[1, 2, 3, 4, 5, 6]),
            1 => (EncoderKind::Angle, &[1, 2, 3, 4, 5, 6]),
            2 => (EncoderKind::StVqc { duplications: 1 }, &[2, 4, 6]),
            _ => (EncoderKind::StVqc { duplications: 2 }, &[3, 6]),
        };
        let n_qubits = widths[(case / 4) % widths.len()];
        // Smallest input that needs `a` address qubits.
        let amp_dim = |a: usize| if a == 1 { 2 } else { (1 << (a - 1)) + 1 };
        let input_dim = match kind {
            EncoderKind::Angle => n_qubits,
            EncoderKind::Amplitude => amp_dim(n_qubits),
            EncoderKind::StVqc { duplications } => amp_dim(n_qubits / (duplications + 1)),
        };
        let layers = 1 + rng.random_range(0..5);
        let model = VqcDesign {
            encoder: kind,
            input_dim,
            ansatz_layers: layers,
            measured_qubit: rng.random_range(0..n_qubits),
            entangler: if rng.random_bool(0.5) { Default::default() } else { vqc_bench::Entangler::CzRing },
        }
        .build()
        .map_err(|e| format!("case {case}: {e}"))?;
        if model.n_qubits() != n_qubits {
            return Err(format!("case {case}: built {} qubits, wanted {n_qubits}", model.n_qubits()));
        }
        seen.entry(kind.label()).or_insert_with(Vec::new).push(n_qubits);
        let params: Vec<f64> = (0..model.n_params()).map(|_| rng.random_range(-3.2..3.2)).collect();
        let batch: Vec<(Vec<f64>, f64)> = (0..3)
            .map(|_| {
                let x: Vec<f64> = (0..input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                (x, rng.random_range(0.1..0.9))
            })
            .collect();
        let ps = parameter_shift_grad(&model, &params, &batch).map_err(|e| e.to_string())?;
        let fd = finite_difference_grad(&model, &params, &batch, 1e-5).map_err(|e| e.to_string())?;
        for (k, (a, b)) in ps.iter().zip(fd.iter()).enumerate() {
            let err = (a - b).abs();
            // Relative error, except absolute for entries too small for it to mean anything.
            let ok = if b.abs() < 1e-2 { err < 1e-8 } else { err / b.abs() < 1e-6 };
            if !ok {
                return Err(format!("case {case} ({kind:?}, {n_qubits}q, {layers}L) param {k}: {a} vs {b}"));
            }
            worst = worst.max(if b.abs() < 1e-2 { err * 1e-2 } else { err / b.abs() });
        }
    }
    let widths: std::collections::BTreeSet<usize> = seen.values().flatten().copied().collect();
    check(
        seen.len() == 4 && widths.len() == 6,
        format!(
            "50 configs, {} encoder families, qubit counts {widths:?}, worst relative error {worst:.2e}",
            seen.len()
        ),
    )
}

fn simulator_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut worst = 0.0f64;
    let mut kinds = [0usize; 6];
    for case in 0..200 {
        let n = 1 + case % 4;
        let raw: Vec<(f64, f64)> = (0..1 << n).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let amps = common::normalized(&raw);
        let kind = (case / 4) as u8;
        let gate = common::make_gate(kind, rng.random_range(0..8), rng.random_range(0..8), rng.random_range(-7.0..7.0), n);
        kinds[usize::from(kind % if n > 1 { 6 } else { 4 })] += 1;
        let got = StateVector::from_amplitudes(amps.clone()).map_err(|e| e.to_string())?
            .apply_gate(&gate)
            .map_err(|e| e.to_string())?;
        let want = common::dense(&gate, n) * DVector::from_vec(amps);
        for (g, w) in got.amplitudes().iter().zip(want.iter()) {
            worst = worst.max((g - w).norm());
        }
        if (got.norm() - 1.0).abs() > 1e-10 {
            return Err(format!("case {case}: norm {}", got.norm()));
        }
    }
    check(
        worst < 1e-12 && kinds.iter().all(|&k| k > 0),
        format!("200 cases, n <= 4, gate counts {kinds:?}, worst amplitude error {worst:.2e}"),
    )
}

fn metric_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    for _ in 0..1000 {
        let (e, r): (f64, f64) = (rng.random_range(0.0..2.0), rng.random_range(-5.0..1.0));
        if approximability_score(e, r) != 0.5 * (1.0 - e) + 0.5 * r {
            return Err(format!("score({e}, {r}) differs from the formula"));
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..100);
        let actual: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let pred: Vec<f64> = (0..n).map(|_| rng.random_range(-0.2..1.2)).collect();
        let mean = actual.iter().sum::<f64>() / n as f64;
        let var = actual.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
        let e = rmse(&pred, &actual).map_err(|e| e.to_string())?;
        let q = r2(&pred, &actual).map_err(|e| e.to_string())?;
        worst = worst.max((e * e - (1.0 - q) * var).abs());
    }
    check(worst < 1e-10, format!("formula exact on 1000 draws; identity worst gap {worst:.2e} on 1000 vectors"))
}

fn protocol_fidelity() -> Outcome {
    let cfg = BenchConfig::full();
    let mut notes = Vec::new();
    for p in &cfg.profiles {
        let ok = p.groups == [1, 2, 3, 4]
            && p.datasets_per_group == 10
            && p.samples_per_dataset == 400
            && p.n_train() == 320;
        if !ok {
            return Err(format!("profile {} deviates: {p:?}", p.name));
        }
    }
    if cfg.train.batch_size != 64 || cfg.train.epochs != 100 {
        return Err(format!("train config deviates: {:?}", cfg.train));
    }

    // Artifacts on disk.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new().build().map_err(|e| e.to_string())?;
    let data = vqc_bench::bench::generate_all(&cfg, &pool).map_err(|e| e.to_string())?;
    let files = write_datasets(&cfg, &data, dir.path()).map_err(|e| e.to_string())?;
    let csvs: Vec<_> = files.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")).collect();
    if csvs.len() != 2 * 4 * 10 {
        return Err(format!("{} dataset files, wanted 80", csvs.len()));
    }
    for path in &csvs {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let train = text.lines().filter(|l| l.ends_with(",train")).count();
        let test = text.lines().filter(|l| l.ends_with(",test")).count();
        if (train, test) != (320, 80) {
            return Err(format!("{}: {train}/{test} rows", path.display()));
        }
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path.with_extension("json")).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        let group: u64 = path.parent().and_then(|p| p.file_name()).and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix('G')).and_then(|n| n.parse().ok())
            .ok_or("bad group dir")?;
        let deg = meta["spec"]["max_degree"].as_u64();
        if deg != Some(2 * group) {
            return Err(format!("{}: max_degree {deg:?} in group {group}", path.display()));
        }
    }
    for per_seed in &data.groups {
        for g in &per_seed[0] {
            if !g.datasets.iter().all(|d| d.spec.attains_degree()) {
                return Err(format!("group {} has a dataset below degree {}", g.group_index, g.degree));
            }
        }
    }
    notes.push("80 dataset files: 320/80 rows, max degree 2X attained".to_string());

    // Report metadata of the protocol, run on the cheapest design.
    let run_cfg = BenchConfig {
        designs: vec![cfg.design("angle-d1").cloned().ok_or("no angle-d1")?],
        profiles: vec![cfg.profile("D1").cloned().ok_or("no D1")?],
        ..cfg.clone()
    };
    let report = run_benchmark(&run_cfg, &RunOptions::default()).map_err(|e| e.to_string())?;
    let back = BenchReport::from_json(&report.to_json().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let row = &back.rows[0];
    let ok = back.config.train.batch_size == 64
        && back.config.train.epochs == 100
        && back.config.profiles[0] == cfg.profiles[0]
        && row.groups.iter().map(|g| (g.group, g.degree)).eq([(1, 2), (2, 4), (3, 6), (4, 8)])
        && row.groups.iter().all(|g| g.per_seed[0].cells.len() == 10)
        && back.errors == 0;
    if !ok {
        return Err("report metadata deviates from the protocol".into());
    }
    let ds = &data.groups[0][0][0].datasets[0];
    let model = cfg.designs[1].build_for(2).map_err(|e| e.to_string())?;
    let h = train(&model, ds, &cfg.train).map_err(|e| e.to_string())?;
    if h.steps != 100 * 5 || h.epoch_losses.len() != 100 {
        return Err(format!("{} steps over {} epochs", h.steps, h.epoch_losses.len()));
    }
    notes.push("report echoes G1..G4 / degree 2X / 10 cells / batch 64 / 100 epochs (500 steps)".into());
    Ok(notes.join("; "))
}

fn nl_trend() -> Outcome {
    let cfg = BenchConfig::full();
    let mut lines = Vec::new();
    let mut ok = true;
    for (slot, p) in cfg.profiles.iter().enumerate() {
        let mut means = Vec::new();
        for &g in &p.groups {
            let mut sum = 0.0;
            for seed in [0u64, 1, 2] {
                let group = generate_group(p, slot as u16, g, seed).map_err(|e| e.to_string())?;
                sum += nl_metric(&group).map_err(|e| e.to_string())?;
            }
            means.push(sum / 3.0);
        }
        let dec = means.windows(2).all(|w| w[1] < w[0]);
        ok &= dec;
        lines.push(format!(
            "{} ({} inputs) {}",
            p.name,
            p.input_dim,
            means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(" > ")
        ));
    }
    check(ok, lines.join("; "))
}

fn desk_report() -> Result<BenchReport, String> {
    run_benchmark(&BenchConfig::desk(), &RunOptions::default()).map_err(|e| e.to_string())
}

fn score(report: &BenchReport, design: &str, group: usize) -> Result<f64, String> {
    report
        .row(design, "D1")
        .and_then(|r| r.group(group))
        .and_then(|g| g.mean_approximability)
        .ok_or_else(|| format!("{design} G{group} missing"))
}

fn benchmark_trend(report: &BenchReport) -> Vec<(&'static str, Outcome)> {
    let eval = || -> Result<[(&'static str, Outcome); 3], String> {
        let mut a_lines = Vec::new();
        let mut a_ok = true;
        for d in ["amplitude-d1", "angle-d1"] {
            let (g1, g4) = (score(report, d, 1)?, score(report, d, 4)?);
            a_ok &= g1 - g4 >= 0.15;
            a_lines.push(format!("{d} G1 {g1:.3} - G4 {g4:.3} = {:.3}", g1 - g4));
        }
        let (st1, amp) = (score(report, "stvqc1-d1", 2)?, score(report, "amplitude-d1", 2)?);
        let (st2, st1g4) = (score(report, "stvqc2-d1", 4)?, score(report, "stvqc1-d1", 4)?);
        Ok([
            ("6a", check(a_ok, a_lines.join("; "))),
            ("6b", check(st1 > amp, format!("G2: ST-VQC(1) {st1:.3} vs Amplitude {amp:.3}"))),
            ("6c", check(st2 > st1g4, format!("G4: ST-VQC(2) {st2:.3} vs ST-VQC(1) {st1g4:.3}"))),
        ])
    };
    match eval() {
        Ok(v) => v.into(),
        Err(e) => vec![("6", Err(e))],
    }
}

fn determinism(first: &BenchReport) -> Outcome {
    let second = desk_report()?;
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    for f in [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown] {
        let pa = emit_report(first, f, a.path()).map_err(|e| e.to_string())?;
        let pb = emit_report(&second, f, b.path()).map_err(|e| e.to_string())?;
        if std::fs::read(&pa).map_err(|e| e.to_string())? != std::fs::read(&pb).map_err(|e| e.to_string())? {
            return Err(format!("{} differs between runs", pa.file_name().unwrap().to_string_lossy()));
        }
    }
    // Within each (profile, seed, group, dataset) every design saw the same files.
    let mut digests: BTreeMap<(String, u64, usize, usize), Vec<&str>> = BTreeMap::new();
    for row in &first.rows {
        for g in &row.groups {
            for s in &g.per_seed {
                for c in &s.cells {
                    digests.entry((row.profile.clone(), s.seed, g.group, c.dataset)).or_default().push(&c.dataset_digest);
                }
            }
        }
    }
    let fair = digests.values().all(|v| v.len() == first.rows.len() && v.windows(2).all(|w| w[0] == w[1]));
    check(
        fair && first.errors == 0,
        format!(
            "report.json/csv/md byte-identical across two runs; {} datasets each shared by {} designs; {} failed cells",
            digests.len(),
            first.rows.len(),
            first.errors
        ),
    )
}

fn curve_sanity() -> Outcome {
    let profile = DataProfile::new("C1", 1);
    let entry = DesignEntry::new("angle", EncoderKind::Angle, 5);
    let model = entry.build_for(1).map_err(|e| e.to_string())?;
    let ds = generate_group_dataset(&profile, 0, 1, 0, 0).map_err(|e| e.to_string())?;
    let h = train(&model, &ds, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let pts = export_curves(&model, &h.final_params, &ds, 200).map_err(|e| e.to_string())?;
    let mean_y = ds.train.iter().map(|s| s.y_norm).sum::<f64>() / ds.train.len() as f64;
    let mad = pts.iter().map(|p| (p.y_pred - p.y_true_norm).abs()).sum::<f64>() / pts.len() as f64;
    let base = pts.iter().map(|p| (mean_y - p.y_true_norm).abs()).sum::<f64>() / pts.len() as f64;
    let in_range = pts.iter().all(|p| (0.0..=1.0).contains(&p.y_pred));
    check(
        mad < base && in_range && pts.len() == 200,
        format!("1-input G1, angle L5: model MAD {mad:.4} vs constant-mean MAD {base:.4}"),
    )
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

fn main() {
    let mut results: Vec<(String, Outcome)> = Vec::new();
    let mut record = |id: &str, name: &str, (out, secs): (Outcome, f64)| {
        print_line(id, name, &out, secs);
        results.push((id.to_string(), out));
    };

    record("1", "gradient correctness", timed(gradient_correctness));
    record("2", "simulator oracle equivalence", timed(simulator_oracle));
    record("3", "metric formula fidelity", timed(metric_fidelity));
    record("4", "protocol fidelity", timed(protocol_fidelity));
    record("5", "NL-metric trend", timed(nl_trend));

    let t = Instant::now();
    let desk = desk_report();
    let desk_secs = t.elapsed().as_secs_f64();
    match &desk {
        Ok(report) => {
            for (id, out) in benchmark_trend(report) {
                record(id, "benchmark trend", (out, desk_secs));
            }
            record("7", "determinism and fairness", timed(|| determinism(report)));
        }
        Err(e) => {
            for id in ["6", "7"] {
                record(id, "desk benchmark", (Err(format!("desk run failed: {e}")), desk_secs));
            }
        }
    }
    record("8", "curve export sanity", timed(curve_sanity));

    let failed = results.iter().filter(|r| r.1.is_err()).count();
    println!("\nacceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn print_line(id: &str, name: &str, out: &Outcome, secs: f64) {
    let (tag, detail) = match out {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("[{tag}] {id:<3} {name} ({secs:.1}s): {detail}");
}
