//! Run configuration: one TOML file, overridden by command-line flags.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use pumpdown::augmentation::DEFAULT_MAX_NNZ;
use pumpdown::io::SyntheticCorpusSpec;
use pumpdown::models::{ExternalEndpoint, Hyperparams, ModelKind};
use pumpdown::robustness::Thresholds;
use pumpdown::ChamberSpec;
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub paths: Paths,
    pub chamber: Option<ChamberConfig>,
    pub synth: SynthConfig,
    pub decomposition: DecompositionConfig,
    pub augmentation: AugmentationConfig,
    pub models: Vec<ModelSpec>,
    pub thresholds: Thresholds,
    pub split: SplitConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub gt_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChamberConfig {
    pub volume_m3: Option<f64>,
    pub leak_flow: f64,
    pub surface_flow: f64,
}

/// Overrides applied on top of the synthetic-corpus defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub events: Option<usize>,
    pub archetypes: Option<usize>,
    pub noise_rel: Option<f64>,
    pub p0_mean: Option<f64>,
    pub p0_std: Option<f64>,
    pub t_mean: Option<f64>,
    pub t_std: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecompositionConfig {
    pub resolution: usize,
    pub epsilon: f64,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            resolution: 500,
            epsilon: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentationConfig {
    pub m: usize,
    pub seed: u64,
    pub max_nnz: usize,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            m: 2000,
            seed: 0,
            max_nnz: DEFAULT_MAX_NNZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub ratio: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { ratio: 0.8, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Report name; defaults to the kind.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    /// Grid-search the model's hyperparameters before the final fit.
    #[serde(default = "yes")]
    pub tune: bool,
    #[serde(default)]
    pub endpoint: Option<ExternalEndpoint>,
}

fn yes() -> bool {
    true
}

impl ModelSpec {
    pub fn builtin(kind: ModelKind) -> Self {
        Self {
            kind,
            name: None,
            hyperparams: Hyperparams::new(),
            tune: true,
            endpoint: None,
        }
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.to_string())
    }
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.paths.gt_dir, &mut config.paths.out_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.synth.seed = Some(seed);
        self.augmentation.seed = seed;
        self.split.seed = seed;
    }

    pub fn out_dir(&self) -> Result<&Path, UsageError> {
        self.paths
            .out_dir
            .as_deref()
            .ok_or_else(|| UsageError("no output directory: pass --out or set paths.out_dir".into()))
    }

    /// The configured ground-truth directory, which must exist.
    pub fn gt_dir(&self) -> Result<&Path, UsageError> {
        let dir = self
            .paths
            .gt_dir
            .as_deref()
            .ok_or_else(|| UsageError("no ground-truth directory: pass --gt or set paths.gt_dir".into()))?;
        if !dir.exists() {
            return Err(UsageError(format!("ground-truth path {} does not exist", dir.display())));
        }
        Ok(dir)
    }

    /// The configured chamber; required whenever real curves are read.
    pub fn chamber(&self) -> Result<ChamberSpec, UsageError> {
        let c = self
            .chamber
            .as_ref()
            .ok_or_else(|| UsageError("missing [chamber] section in config".into()))?;
        let volume = c
            .volume_m3
            .ok_or_else(|| UsageError("missing chamber.volume_m3 in config".into()))?;
        ChamberSpec::new(volume, c.leak_flow, c.surface_flow).map_err(|e| UsageError(e.to_string()))
    }

    pub fn synth_spec(&self) -> Result<SyntheticCorpusSpec, UsageError> {
        let mut spec = SyntheticCorpusSpec::default();
        let s = &self.synth;
        if let Some(v) = s.events {
            spec.n_events = v;
        }
        if let Some(v) = s.archetypes {
            spec.speed_archetypes = v;
        }
        if let Some(v) = s.noise_rel {
            spec.noise_rel = v;
        }
        if let Some(v) = s.p0_mean {
            spec.p0_mean = v;
        }
        if let Some(v) = s.p0_std {
            spec.p0_std = v;
        }
        if let Some(v) = s.t_mean {
            spec.t_mean = v;
        }
        if let Some(v) = s.t_std {
            spec.t_std = v;
        }
        if let Some(v) = s.seed {
            spec.seed = v;
        }
        if self.chamber.is_some() {
            spec.chamber = self.chamber()?;
        }
        spec.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(spec)
    }

    pub fn validate_decomposition(&self) -> Result<(), UsageError> {
        let d = &self.decomposition;
        if d.resolution < 2 {
            return Err(UsageError(format!("resolution must be at least 2, got {}", d.resolution)));
        }
        if !(d.epsilon.is_finite() && d.epsilon > 0.0) {
            return Err(UsageError(format!("epsilon must be positive, got {}", d.epsilon)));
        }
        Ok(())
    }

    pub fn validate_augmentation(&self) -> Result<(), UsageError> {
        let a = &self.augmentation;
        if a.m == 0 {
            return Err(UsageError("augmentation.m must be positive".into()));
        }
        if a.max_nnz == 0 {
            return Err(UsageError("augmentation.max_nnz must be positive".into()));
        }
        Ok(())
    }

    pub fn validate_test(&self) -> Result<(), UsageError> {
        if self.models.is_empty() {
            return Err(UsageError("no models configured".into()));
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return Err(UsageError(format!("split.ratio must be in (0, 1), got {}", self.split.ratio)));
        }
        self.thresholds.validate().map_err(|e| UsageError(e.to_string()))?;
        let mut names = BTreeSet::new();
        for m in &self.models {
            let name = m.name();
            if !names.insert(name.clone()) {
                return Err(UsageError(format!("duplicate model name `{name}`")));
            }
            match (m.kind, &m.endpoint) {
                (ModelKind::External, None) => {
                    return Err(UsageError(format!("external model `{name}` needs an endpoint")))
                }
                (ModelKind::External, Some(_)) => {}
                (_, Some(_)) => return Err(UsageError(format!("model `{name}` is built in; drop its endpoint"))),
                (_, None) => {}
            }
        }
        Ok(())
    }
}
