use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::daugman::DaugmanConfig;
use crate::error::{Error, Result};
use crate::hogsvm::{HogConfig, ScanConfig, TrainParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Daugman,
    Hogsvm,
    External,
}

impl DetectorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::Daugman => "daugman",
            DetectorKind::Hogsvm => "hogsvm",
            DetectorKind::External => "external",
        }
    }
}

/// One experiment: which detector, which manifests to train and test on, and
/// where to write reports.
///
/// Training uses the `train` split of every `train` manifest (several
/// manifests pool their images); testing uses the `test` split of every
/// `test` manifest, reported separately per manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub detector: DetectorKind,
    #[serde(default)]
    pub train: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub overlays: bool,
    /// External detections file (`detector = "external"`).
    #[serde(default)]
    pub detections: Option<PathBuf>,
    /// Keep only detections with this source tag.
    #[serde(default)]
    pub source: Option<String>,
    /// Pre-trained HOG-SVM model; when set, no training happens.
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub daugman: DaugmanConfig,
    /// Per-dataset Daugman settings, keyed by manifest dataset name.
    #[serde(default)]
    pub daugman_overrides: BTreeMap<String, DaugmanConfig>,
    #[serde(default)]
    pub hog: HogConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub svm: TrainParams,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, detector: DetectorKind, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            name: name.into(),
            detector,
            train: Vec::new(),
            test: Vec::new(),
            seed: 0,
            output_dir: output_dir.into(),
            overlays: false,
            detections: None,
            source: None,
            model: None,
            daugman: DaugmanConfig::default(),
            daugman_overrides: BTreeMap::new(),
            hog: HogConfig::default(),
            scan: ScanConfig::default(),
            svm: TrainParams::default(),
        }
    }

    /// Parse a TOML config; relative paths are resolved against the file's
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.train.iter_mut().for_each(fix);
        self.test.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
        if let Some(p) = self.detections.as_mut() {
            fix(p);
        }
        if let Some(p) = self.model.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.name.trim().is_empty() {
            return bad("experiment name is empty");
        }
        if self.test.is_empty() {
            return bad("at least one test manifest is required");
        }
        match self.detector {
            DetectorKind::External if self.detections.is_none() => {
                return bad("the external detector requires a detections path")
            }
            DetectorKind::Hogsvm if self.train.is_empty() && self.model.is_none() => {
                return bad("the hogsvm detector requires at least one train manifest (or a model file)")
            }
            _ => {}
        }
        let wrap = |e: Error| Error::Config(e.to_string());
        self.daugman.validate().map_err(wrap)?;
        for (name, c) in &self.daugman_overrides {
            c.validate().map_err(|e| Error::Config(format!("daugman override {name:?}: {e}")))?;
        }
        self.hog.validate().map_err(wrap)?;
        self.scan.validate().map_err(wrap)?;
        if self.svm.c_grid.is_empty() || self.svm.folds < 2 {
            return bad("svm.c_grid must be non-empty and svm.folds >= 2");
        }
        Ok(())
    }

    pub fn daugman_for(&self, dataset: &str) -> &DaugmanConfig {
        self.daugman_overrides.get(dataset).unwrap_or(&self.daugman)
    }
}
