use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::{Entangler, Vqc, VqcDesign};
use crate::datagen::DataProfile;
use crate::encoding::EncoderKind;
use crate::error::{Error, Result};
use crate::trainer::TrainConfig;

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "VQC_BENCH_OUT";

/// A labelled design template; the input dimension comes from each profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignEntry {
    pub label: String,
    pub encoder: EncoderKind,
    pub ansatz_layers: usize,
    #[serde(default)]
    pub measured_qubit: usize,
    #[serde(default)]
    pub entangler: Entangler,
    /// Profiles this design runs on; all profiles when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Vec<String>>,
}

impl DesignEntry {
    pub fn new(label: impl Into<String>, encoder: EncoderKind, ansatz_layers: usize) -> Self {
        Self {
            label: label.into(),
            encoder,
            ansatz_layers,
            measured_qubit: 0,
            entangler: Entangler::default(),
            profiles: None,
        }
    }

    pub fn scoped(mut self, profile: &str) -> Self {
        self.profiles = Some(vec![profile.to_string()]);
        self
    }

    pub fn applies_to(&self, profile: &str) -> bool {
        self.profiles
            .as_ref()
            .map_or(true, |ps| ps.iter().any(|p| p == profile))
    }

    pub fn design_for(&self, input_dim: usize) -> VqcDesign {
        VqcDesign {
            encoder: self.encoder,
            input_dim,
            ansatz_layers: self.ansatz_layers,
            measured_qubit: self.measured_qubit,
            entangler: self.entangler,
        }
    }

    pub fn build_for(&self, input_dim: usize) -> Result<Vqc> {
        self.design_for(input_dim).build().map_err(|e| {
            Error::Config(format!("design {:?} on {input_dim} inputs: {e}", self.label))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub designs: Vec<DesignEntry>,
    pub profiles: Vec<DataProfile>,
    #[serde(default)]
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The full protocol: two profiles (2 and 4 inputs), groups G1..G4 of
    /// ten 400-sample datasets split 320/80, batch 64, 100 epochs, and the
    /// four encoder families at roughly 20 parameters on two inputs.
    pub fn full() -> Self {
        let amp = EncoderKind::Amplitude;
        let angle = EncoderKind::Angle;
        let st1 = EncoderKind::StVqc { duplications: 1 };
        let st2 = EncoderKind::StVqc { duplications: 2 };
        let designs = vec![
            DesignEntry::new("amplitude-d1", amp, 10).scoped("D1"),
            DesignEntry::new("angle-d1", angle, 5).scoped("D1"),
            DesignEntry::new("stvqc1-d1", st1, 5).scoped("D1"),
            DesignEntry::new("stvqc2-d1", st2, 4).scoped("D1"),
            DesignEntry::new("amplitude-d2", amp, 5).scoped("D2"),
            DesignEntry::new("angle-d2", angle, 4).scoped("D2"),
            DesignEntry::new("stvqc1-d2", st1, 4).scoped("D2"),
            DesignEntry::new("stvqc2-d2", st2, 4).scoped("D2"),
        ];
        Self {
            designs,
            profiles: vec![DataProfile::new("D1", 2), DataProfile::new("D2", 4)],
            train: TrainConfig::default(),
            seeds: vec![0],
            output_dir: None,
        }
    }

    /// Laptop-sized variant on the 2-input profile: 5 datasets of 200
    /// samples per group, 50 epochs, three seeds.
    pub fn desk() -> Self {
        let full = Self::full();
        Self {
            designs: full.designs.into_iter().filter(|d| d.applies_to("D1")).collect(),
            profiles: vec![DataProfile {
                datasets_per_group: 5,
                samples_per_dataset: 200,
                ..DataProfile::new("D1", 2)
            }],
            train: TrainConfig { epochs: 50, ..TrainConfig::default() },
            seeds: vec![0, 1, 2],
            output_dir: None,
        }
    }

    pub fn design(&self, label: &str) -> Option<&DesignEntry> {
        self.designs.iter().find(|d| d.label == label)
    }

    pub fn profile(&self, name: &str) -> Option<&DataProfile> {
        self.profiles.iter().find(|p| p.name == name)
    }

    /// `(profile slot, profile)` pairs a design runs on.
    pub fn profiles_for<'a>(
        &'a self,
        design: &'a DesignEntry,
    ) -> impl Iterator<Item = (usize, &'a DataProfile)> + 'a {
        self.profiles
            .iter()
            .enumerate()
            .filter(move |(_, p)| design.applies_to(&p.name))
    }

    /// Output directory: explicit override, then `VQC_BENCH_OUT`, then the
    /// config file, then `bench-out`.
    pub fn resolve_output_dir(&self, explicit: Option<&Path>) -> PathBuf {
        if let Some(p) = explicit {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("bench-out"))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.designs.is_empty() {
            return bad("config needs at least one design".into());
        }
        if self.profiles.is_empty() {
            return bad("config needs at least one dataset profile".into());
        }
        if self.seeds.is_empty() {
            return bad("config needs at least one master seed".into());
        }
        let mut seen = HashSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return bad(format!("duplicate seed {s}"));
        }
        if self.profiles.len() > usize::from(u16::MAX) {
            return bad("too many profiles".into());
        }
        self.train.validate()?;
        let mut names = HashSet::new();
        for p in &self.profiles {
            p.validate()?;
            if !names.insert(p.name.as_str()) {
                return bad(format!("duplicate profile name {:?}", p.name));
            }
            if self.train.batch_size > p.n_train() {
                return bad(format!(
                    "batch size {} exceeds the {} training samples of profile {:?}",
                    self.train.batch_size,
                    p.n_train(),
                    p.name
                ));
            }
        }
        let mut labels = HashSet::new();
        for d in &self.designs {
            if !labels.insert(d.label.as_str()) {
                return bad(format!("duplicate design label {:?}", d.label));
            }
            if let Some(scope) = &d.profiles {
                if let Some(missing) = scope.iter().find(|s| !names.contains(s.as_str())) {
                    return bad(format!("design {:?} names unknown profile {missing:?}", d.label));
                }
            }
            let mut any = false;
            for (_, p) in self.profiles_for(d) {
                d.build_for(p.input_dim)?;
                any = true;
            }
            if !any {
                return bad(format!("design {:?} applies to no profile", d.label));
            }
        }
        Ok(())
    }
}
