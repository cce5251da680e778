//! Synthetic polynomial regression datasets grouped by maximum degree.
//!
//! Group `X` holds datasets whose generating polynomial has total degree
//! exactly `2X`. Every random draw flows from a ChaCha8 stream keyed by
//! `(master seed, profile, group, dataset, attempt)`, so a whole group is a
//! pure function of its configuration.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gradient::Example;

/// Samples with a smaller Euclidean norm are rejected.
pub const MIN_INPUT_NORM: f64 = 0.1;
/// Lower bound on `|c|` for terms of maximal degree.
pub const TOP_COEFFICIENT_FLOOR: f64 = 0.2;
pub const KEEP_PROBABILITY: f64 = 0.5;
/// Normalized targets of the training split span this interval.
pub const TARGET_RANGE: (f64, f64) = (0.1, 0.9);
const MAX_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

impl Term {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// Univariate basis a term's exponent vector indexes into. A term with
/// exponents `e` is `c * prod_i b_{e_i}(x_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// `b_n(x) = x^n`.
    Monomial,
    /// Orthonormal Legendre polynomials `sqrt(2n+1) P_n`.
    Legendre,
    /// Chebyshev polynomials of the first kind `T_n`.
    #[default]
    Chebyshev,
}

impl Basis {
    pub fn eval(self, n: u32, x: f64) -> f64 {
        // Three-term recurrences p_{k+1} = a_k x p_k - b_k p_{k-1}.
        let recur = |a: &dyn Fn(f64) -> f64, b: &dyn Fn(f64) -> f64| {
            let (mut prev, mut cur) = (1.0, x);
            if n == 0 {
                return prev;
            }
            for k in 1..n {
                let k = f64::from(k);
                let next = a(k) * x * cur - b(k) * prev;
                prev = cur;
                cur = next;
            }
            cur
        };
        match self {
            Basis::Monomial => x.powi(n as i32),
            Basis::Legendre => {
                let p = recur(&|k| (2.0 * k + 1.0) / (k + 1.0), &|k| k / (k + 1.0));
                (2.0 * f64::from(n) + 1.0).sqrt() * p
            }
            Basis::Chebyshev => recur(&|_| 2.0, &|_| 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSpec {
    pub input_dim: usize,
    pub max_degree: u32,
    #[serde(default)]
    pub basis: Basis,
    pub terms: Vec<Term>,
}

/// All exponent vectors of length `dim` with total degree `<= max_degree`,
/// ordered by degree, then reverse-lexicographically.
pub fn exponent_universe(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    fn fill(prefix: &mut Vec<u32>, dim: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            fill(prefix, dim, left - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for degree in 0..=max_degree {
        fill(&mut Vec::with_capacity(dim), dim, degree, &mut out);
    }
    out
}

impl PolynomialSpec {
    /// Draws a random polynomial of total degree exactly `max_degree`.
    pub fn sample<R: Rng + ?Sized>(
        input_dim: usize,
        max_degree: u32,
        basis: Basis,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || max_degree == 0 {
            return Err(Error::Config("polynomial needs input_dim >= 1 and degree >= 1".into()));
        }
        let floor = TOP_COEFFICIENT_FLOOR;
        let top_coefficient = |rng: &mut R| {
            let magnitude = rng.random_range(floor..=1.0);
            if rng.random_bool(0.5) { magnitude } else { -magnitude }
        };
        let mut terms = Vec::new();
        let mut top_kept = false;
        let universe = exponent_universe(input_dim, max_degree);
        for exponents in &universe {
            if !rng.random_bool(KEEP_PROBABILITY) {
                continue;
            }
            let top = exponents.iter().sum::<u32>() == max_degree;
            let coefficient = if top {
                top_kept = true;
                top_coefficient(rng)
            } else {
                rng.random_range(-1.0..=1.0)
            };
            terms.push(Term { exponents: exponents.clone(), coefficient });
        }
        if !top_kept {
            let tops: Vec<_> = universe
                .iter()
                .filter(|e| e.iter().sum::<u32>() == max_degree)
                .collect();
            let exponents = tops[rng.random_range(0..tops.len())].clone();
            let coefficient = top_coefficient(rng);
            terms.push(Term { exponents, coefficient });
        }
        Ok(Self { input_dim, max_degree, basis, terms })
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "polynomial takes {} inputs, got {}",
                self.input_dim,
                x.len()
            )));
        }
        Ok(self
            .terms
            .iter()
            .map(|t| {
                t.exponents
                    .iter()
                    .zip(x)
                    .fold(t.coefficient, |acc, (&e, &v)| acc * self.basis.eval(e, v))
            })
            .sum())
    }

    /// True when some term of maximal degree has `|c| >= 0.2`.
    pub fn attains_degree(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.degree() == self.max_degree && t.coefficient.abs() >= TOP_COEFFICIENT_FLOOR)
    }
}

/// A raw generated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
    pub y_norm: f64,
}

impl Example for Sample {
    fn input(&self) -> &[f64] {
        &self.x
    }
    fn target(&self) -> f64 {
        self.y_norm
    }
}

/// Generated points before splitting; `shuffle_seed` drives [`split`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub spec: PolynomialSpec,
    pub shuffle_seed: u64,
    pub points: Vec<Point>,
}

/// Uniform on `[-1, 1]^d`, rejecting points inside the `MIN_INPUT_NORM` ball.
pub fn sample_input<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() >= MIN_INPUT_NORM {
            return x;
        }
    }
}

pub fn generate_dataset<R: Rng + ?Sized>(
    spec: &PolynomialSpec,
    n_samples: usize,
    rng: &mut R,
) -> Result<RawDataset> {
    if n_samples < 10 {
        return Err(Error::Config(format!("need at least 10 samples, got {n_samples}")));
    }
    let shuffle_seed = rng.next_u64();
    let points = (0..n_samples)
        .map(|_| {
            let x = sample_input(spec.input_dim, rng);
            let y = spec.evaluate(&x)?;
            Ok(Point { x, y })
        })
        .collect::<Result<_>>()?;
    Ok(RawDataset { spec: spec.clone(), shuffle_seed, points })
}

/// Shuffles with the dataset's own seed; the first `floor(n * f)` points
/// train, the rest test.
pub fn split(dataset: &RawDataset, train_fraction: f64) -> Result<(Vec<Point>, Vec<Point>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n = dataset.points.len();
    let n_train = (n as f64 * train_fraction).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Config(format!(
            "fraction {train_fraction} of {n} samples leaves an empty split"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(dataset.shuffle_seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| dataset.points[i].clone()).collect();
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

/// Affine target map fitted on the training split: the training mean goes
/// to 0.5 and the largest training deviation from it to 0.4, so every
/// training target lands in `[0.1, 0.9]` with at least one endpoint attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub center: f64,
    pub half_range: f64,
}

impl TargetScaler {
    pub fn fit(ys: impl IntoIterator<Item = f64>) -> Result<Self> {
        let ys: Vec<f64> = ys.into_iter().collect();
        if ys.is_empty() || ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::Degenerate("training targets missing or non-finite".into()));
        }
        let center = ys.iter().sum::<f64>() / ys.len() as f64;
        let half_range = ys.iter().map(|y| (y - center).abs()).fold(0.0, f64::max);
        if half_range <= 1e-12 * center.abs().max(1.0) {
            return Err(Error::Degenerate(format!("constant training targets ({center})")));
        }
        Ok(Self { center, half_range })
    }

    pub fn transform(&self, y: f64) -> f64 {
        let (lo, hi) = TARGET_RANGE;
        0.5 * (lo + hi) + 0.5 * (hi - lo) * (y - self.center) / self.half_range
    }

    pub fn inverse(&self, y_norm: f64) -> f64 {
        let (lo, hi) = TARGET_RANGE;
        self.center + (y_norm - 0.5 * (lo + hi)) * self.half_range / (0.5 * (hi - lo))
    }
}

/// Fits the scaler on `train` only and applies it to both splits. Test
/// targets may leave `[0.1, 0.9]`; they are never clipped.
pub fn normalize_targets(
    train: &[Point],
    test: &[Point],
) -> Result<(Vec<Sample>, Vec<Sample>, TargetScaler)> {
    if train.is_empty() {
        return Err(Error::Degenerate("empty training split".into()));
    }
    let scaler = TargetScaler::fit(train.iter().map(|p| p.y))?;
    let apply = |pts: &[Point]| {
        pts.iter()
            .map(|p| Sample { x: p.x.clone(), y: p.y, y_norm: scaler.transform(p.y) })
            .collect()
    };
    Ok((apply(train), apply(test), scaler))
}

/// A split, normalized dataset ready for training.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: PolynomialSpec,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub scaler: TargetScaler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    spec: PolynomialSpec,
    scaler: TargetScaler,
    n_train: usize,
    n_test: usize,
}

impl Dataset {
    pub fn from_raw(raw: &RawDataset, train_fraction: f64) -> Result<Self> {
        let (train, test) = split(raw, train_fraction)?;
        let (train, test, scaler) = normalize_targets(&train, &test)?;
        Ok(Self { spec: raw.spec.clone(), train, test, scaler })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    /// CSV with columns `x_0..x_{d-1}, y, y_norm, split`; train rows first.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.input_dim()).map(|i| format!("x_{i}")).collect();
        header.extend(["y", "y_norm", "split"].map(String::from));
        w.write_record(&header)?;
        for (tag, rows) in [("train", &self.train), ("test", &self.test)] {
            for s in rows {
                let mut rec: Vec<String> = s.x.iter().map(|v| v.to_string()).collect();
                rec.push(s.y.to_string());
                rec.push(s.y_norm.to_string());
                rec.push(tag.to_string());
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    /// JSON sidecar carrying the generating polynomial and target scaler.
    pub fn sidecar_json(&self) -> Result<String> {
        let meta = Sidecar {
            spec: self.spec.clone(),
            scaler: self.scaler,
            n_train: self.train.len(),
            n_test: self.test.len(),
        };
        Ok(serde_json::to_string_pretty(&meta)?)
    }

    /// SHA-256 over the CSV and sidecar bytes, hex encoded.
    pub fn digest(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(self.csv_bytes()?);
        h.update(self.sidecar_json()?.as_bytes());
        Ok(hex::encode(h.finalize()))
    }

    /// Writes `<stem>.csv` and `<stem>.json` under `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&csv_path, self.csv_bytes()?)?;
        std::fs::write(&json_path, self.sidecar_json()?)?;
        Ok((csv_path, json_path))
    }

    pub fn load(csv_path: &Path, json_path: &Path) -> Result<Self> {
        let meta: Sidecar = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
        let mut bytes = Vec::new();
        std::fs::File::open(csv_path)?.read_to_end(&mut bytes)?;
        let mut rdr = csv::Reader::from_reader(bytes.as_slice());
        let d = meta.spec.input_dim;
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != d + 3 {
                return Err(Error::Shape(format!("expected {} columns, got {}", d + 3, rec.len())));
            }
            let num = |i: usize| {
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Shape(format!("column {i}: {e}")))
            };
            let sample = Sample {
                x: (0..d).map(num).collect::<Result<_>>()?,
                y: num(d)?,
                y_norm: num(d + 1)?,
            };
            match &rec[d + 2] {
                "train" => train.push(sample),
                "test" => test.push(sample),
                other => return Err(Error::Shape(format!("unknown split tag {other:?}"))),
            }
        }
        if train.len() != meta.n_train || test.len() != meta.n_test {
            return Err(Error::Shape("split sizes disagree with sidecar".into()));
        }
        Ok(Self { spec: meta.spec, train, test, scaler: meta.scaler })
    }
}

/// Shape of the datasets generated for one input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataProfile {
    pub name: String,
    pub input_dim: usize,
    #[serde(default = "default_groups")]
    pub groups: Vec<usize>,
    #[serde(default = "default_datasets")]
    pub datasets_per_group: usize,
    #[serde(default = "default_samples")]
    pub samples_per_dataset: usize,
    #[serde(default = "default_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub basis: Basis,
}

fn default_groups() -> Vec<usize> {
    vec![1, 2, 3, 4]
}
fn default_datasets() -> usize {
    10
}
fn default_samples() -> usize {
    400
}
fn default_fraction() -> f64 {
    0.8
}

impl DataProfile {
    /// Four groups of ten 400-sample datasets, split 80/20.
    pub fn new(name: impl Into<String>, input_dim: usize) -> Self {
        Self {
            name: name.into(),
            input_dim,
            groups: default_groups(),
            datasets_per_group: default_datasets(),
            samples_per_dataset: default_samples(),
            train_fraction: default_fraction(),
            basis: Basis::default(),
        }
    }

    pub fn n_train(&self) -> usize {
        (self.samples_per_dataset as f64 * self.train_fraction).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("profile {:?}: {m}", self.name)));
        if self.input_dim == 0 {
            return bad("input_dim must be positive".into());
        }
        if self.groups.is_empty() || self.groups.iter().any(|&g| g == 0 || g > 64) {
            return bad(format!("group indices {:?} must be in 1..=64", self.groups));
        }
        if self.datasets_per_group == 0 || self.datasets_per_group >= 1 << 24 {
            return bad("datasets_per_group must be in 1..2^24".into());
        }
        if self.samples_per_dataset < 10 {
            return bad("samples_per_dataset must be >= 10".into());
        }
        let n_train = self.n_train();
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0)
            || n_train == 0
            || n_train == self.samples_per_dataset
        {
            return bad(format!("train_fraction {} leaves an empty split", self.train_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetGroup {
    pub group_index: usize,
    pub degree: u32,
    pub datasets: Vec<Dataset>,
}

/// RNG for one dataset: the master seed selects the key, the remaining
/// coordinates select a ChaCha stream.
pub fn dataset_rng(master_seed: u64, profile_slot: u16, group: usize, index: usize, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let stream = (u64::from(profile_slot) << 48)
        | ((group as u64 & 0xff) << 40)
        | ((index as u64 & 0xff_ffff) << 16)
        | (attempt & 0xffff);
    rng.set_stream(stream);
    rng
}

/// Generates one dataset of a group, retrying on the next stream when the
/// draw has constant training targets.
pub fn generate_group_dataset(
    profile: &DataProfile,
    profile_slot: u16,
    group_index: usize,
    index: usize,
    master_seed: u64,
) -> Result<Dataset> {
    let degree = 2 * group_index as u32;
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = dataset_rng(master_seed, profile_slot, group_index, index, attempt);
        let spec = PolynomialSpec::sample(profile.input_dim, degree, profile.basis, &mut rng)?;
        let raw = generate_dataset(&spec, profile.samples_per_dataset, &mut rng)?;
        match Dataset::from_raw(&raw, profile.train_fraction) {
            Err(e @ Error::Degenerate(_)) => last = Some(e),
            other => return other,
        }
    }
    Err(last.unwrap_or_else(|| Error::Degenerate("no attempts made".into())))
}

/// Group `X` of `profile`: `datasets_per_group` datasets of degree `2X`.
pub fn generate_group(
    profile: &DataProfile,
    profile_slot: u16,
    group_index: usize,
    master_seed: u64,
) -> Result<DatasetGroup> {
    profile.validate()?;
    let datasets = (0..profile.datasets_per_group)
        .map(|i| generate_group_dataset(profile, profile_slot, group_index, i, master_seed))
        .collect::<Result<_>>()?;
    Ok(DatasetGroup { group_index, degree: 2 * group_index as u32, datasets })
}
