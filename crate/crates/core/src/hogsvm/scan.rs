use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hog::{hog_descriptor, FeatureVector, HogConfig};
use super::svm::LinearModel;
use crate::bbox::BBox;
use crate::error::{Error, Result};
use crate::image::{crop_resize, GrayImage};

/// Negatives must overlap the ground truth by less than this IoU.
pub const NEGATIVE_MAX_IOU: f64 = 0.25;
pub const NEGATIVES_PER_POSITIVE: usize = 10;
/// Rejected candidate draws tolerated before giving up on an image.
pub const MAX_REJECTED_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub canonical_side: usize,
    pub scales_down: u32,
    pub scales_up: u32,
    pub scale_factor: f64,
    pub stride: usize,
    /// Best-window score below this counts as no detection; `None` always
    /// returns the argmax.
    pub min_margin: Option<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { canonical_side: 50, scales_down: 6, scales_up: 8, scale_factor: 1.05, stride: 4, min_margin: None }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.canonical_side < 1 || !(self.scale_factor > 1.0) || self.stride < 1 {
            return Err(Error::InvalidArgument(format!("invalid scan config {self:?}")));
        }
        Ok(())
    }

    /// Window sides `round(canonical · factor^k)` for `k = -down..=up`,
    /// ascending, duplicates dropped.
    pub fn scale_sides(&self) -> Vec<usize> {
        let mut sides: Vec<usize> = (-(self.scales_down as i32)..=self.scales_up as i32)
            .map(|k| (self.canonical_side as f64 * self.scale_factor.powi(k)).round().max(1.0) as usize)
            .collect();
        sides.dedup();
        sides
    }
}

/// Crop a box, resize it to the descriptor window and describe it.
pub fn window_descriptor(img: &GrayImage, bbox: &BBox, hog: &HogConfig) -> Result<FeatureVector> {
    hog_descriptor(&crop_resize(img, bbox, hog.window_side)?, hog)
}

#[derive(Debug, Clone)]
pub struct TrainingWindows {
    pub positive: GrayImage,
    pub negatives: Vec<GrayImage>,
    pub negative_boxes: Vec<BBox>,
}

/// The ground-truth crop plus ten rejection-sampled negatives of random
/// scan-list side and position whose IoU with the ground truth is below 0.25.
pub fn sample_training_windows<R: Rng + ?Sized>(
    img: &GrayImage,
    gt: &BBox,
    scan: &ScanConfig,
    hog: &HogConfig,
    rng: &mut R,
) -> Result<TrainingWindows> {
    let positive = crop_resize(img, gt, hog.window_side)?;
    let (w, h) = (img.width(), img.height());
    let sides: Vec<usize> = scan.scale_sides().into_iter().filter(|&s| s <= w && s <= h).collect();
    if sides.is_empty() {
        return Err(Error::InsufficientNegativeSpace(0));
    }
    let mut negatives = Vec::with_capacity(NEGATIVES_PER_POSITIVE);
    let mut negative_boxes = Vec::with_capacity(NEGATIVES_PER_POSITIVE);
    let mut rejected = 0;
    while negatives.len() < NEGATIVES_PER_POSITIVE {
        let side = sides[rng.random_range(0..sides.len())];
        let x = rng.random_range(0..=w - side) as i64;
        let y = rng.random_range(0..=h - side) as i64;
        let cand = BBox::square(x, y, side as i64);
        if cand.iou(gt) < NEGATIVE_MAX_IOU {
            negatives.push(crop_resize(img, &cand, hog.window_side)?);
            negative_boxes.push(cand);
        } else {
            rejected += 1;
            if rejected >= MAX_REJECTED_DRAWS {
                return Err(Error::InsufficientNegativeSpace(rejected));
            }
        }
    }
    Ok(TrainingWindows { positive, negatives, negative_boxes })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    pub score: f64,
}

/// Score every stride-aligned window at every scale and return the best one.
/// Ties go to the smaller scale, then the smaller `(y, x)`.
pub fn sliding_window_detect(
    img: &GrayImage,
    model: &LinearModel,
    scan: &ScanConfig,
    hog: &HogConfig,
) -> Result<Detection> {
    scan.validate()?;
    hog.validate()?;
    if model.weights.len() != hog.descriptor_len() {
        return Err(Error::DimensionMismatch { expected: hog.descriptor_len(), got: model.weights.len() });
    }
    let (w, h) = (img.width(), img.height());
    let sides = scan.scale_sides();
    let min_side = sides[0];
    if min_side > w || min_side > h {
        return Err(Error::ImageSmallerThanMinScale { width: w, height: h, min_side });
    }
    let mut best: Option<Detection> = None;
    for side in sides.into_iter().filter(|&s| s <= w && s <= h) {
        for y in (0..=h - side).step_by(scan.stride) {
            for x in (0..=w - side).step_by(scan.stride) {
                let bbox = BBox::square(x as i64, y as i64, side as i64);
                let score = model.score(window_descriptor(img, &bbox, hog)?.as_slice());
                if best.is_none_or(|b| score > b.score) {
                    best = Some(Detection { bbox, score });
                }
            }
        }
    }
    Ok(best.expect("at least one window fits"))
}
