//! HOG descriptor + linear SVM iris detector: training-window sampling,
//! regularization grid search, multi-scale sliding-window detection and the
//! model file.

mod hog;
mod scan;
mod svm;

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use hog::{hog_descriptor, FeatureVector, HogConfig};
pub use scan::{
    sample_training_windows, sliding_window_detect, window_descriptor, Detection, ScanConfig, TrainingWindows,
    MAX_REJECTED_DRAWS, NEGATIVES_PER_POSITIVE, NEGATIVE_MAX_IOU,
};
pub use svm::{grid_search_c, objective, train_linear_svm, GridSearch, LinearModel, TrainMeta};

use crate::bbox::BBox;
use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const MODEL_FORMAT: &str = "irisloc-hogsvm";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub c_grid: Vec<f64>,
    pub folds: usize,
    pub epochs: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self { c_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0], folds: 3, epochs: 20 }
    }
}

/// A trained detector: descriptor and scan geometry plus the linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HogSvmDetector {
    pub hog: HogConfig,
    pub scan: ScanConfig,
    pub model: LinearModel,
}

/// Labelled descriptors accumulated image by image. One RNG drives the
/// negative draws of every image, so the order of `add` calls matters.
pub struct TrainingSet {
    hog: HogConfig,
    scan: ScanConfig,
    seed: u64,
    rng: ChaCha8Rng,
    features: Vec<FeatureVector>,
    labels: Vec<i8>,
}

impl TrainingSet {
    pub fn new(hog: HogConfig, scan: ScanConfig, seed: u64) -> Result<Self> {
        hog.validate()?;
        scan.validate()?;
        Ok(Self {
            hog,
            scan,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            features: Vec::new(),
            labels: Vec::new(),
        })
    }

    pub fn add(&mut self, img: &GrayImage, gt: &BBox) -> Result<()> {
        let windows = sample_training_windows(img, gt, &self.scan, &self.hog, &mut self.rng)?;
        let mut feats = vec![(hog_descriptor(&windows.positive, &self.hog)?, 1)];
        for neg in &windows.negatives {
            feats.push((hog_descriptor(neg, &self.hog)?, -1));
        }
        for (f, l) in feats {
            self.features.push(f);
            self.labels.push(l);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn fit(self, params: &TrainParams) -> Result<HogSvmDetector> {
        let search = grid_search_c(&self.features, &self.labels, &params.c_grid, params.folds, self.seed, params.epochs)?;
        let mut model = train_linear_svm(&self.features, &self.labels, search.best_c, self.seed, params.epochs)?;
        model.train_meta.c_grid = search.scores;
        Ok(HogSvmDetector { hog: self.hog, scan: self.scan, model })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    detector: HogSvmDetector,
}

impl HogSvmDetector {
    /// Sample one positive and ten negatives per image, grid-search `C` on
    /// the pooled windows, then fit the final model on all of them.
    pub fn train<'a>(
        samples: impl IntoIterator<Item = (&'a GrayImage, BBox)>,
        hog: HogConfig,
        scan: ScanConfig,
        params: &TrainParams,
        seed: u64,
    ) -> Result<Self> {
        let mut set = TrainingSet::new(hog, scan, seed)?;
        for (img, gt) in samples {
            set.add(img, &gt)?;
        }
        set.fit(params)
    }

    pub fn detect(&self, img: &GrayImage) -> Result<Detection> {
        sliding_window_detect(img, &self.model, &self.scan, &self.hog)
    }

    /// Best window, or `None` when its score is below `scan.min_margin`.
    pub fn detect_thresholded(&self, img: &GrayImage) -> Result<Option<Detection>> {
        let d = self.detect(img)?;
        Ok(match self.scan.min_margin {
            Some(m) if d.score < m => None,
            _ => Some(d),
        })
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, detector: self.clone() };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("unexpected format tag {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!("unsupported model version {}", file.version)));
        }
        let det = file.detector;
        det.hog.validate()?;
        det.scan.validate()?;
        if det.model.weights.len() != det.hog.descriptor_len() {
            return Err(Error::DimensionMismatch { expected: det.hog.descriptor_len(), got: det.model.weights.len() });
        }
        Ok(det)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
