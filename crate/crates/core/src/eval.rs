//! Pixel-level comparison of a ground-truth box and a predicted box over the
//! full image grid, the four ratio metrics derived from it, dataset means and
//! the minimum-recall curve.

use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl EvalCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Counts for an image with no prediction: every ground-truth pixel is
    /// missed.
    pub fn missed(gt: &BBox, img_w: usize, img_h: usize) -> Result<Self> {
        let gt = gt.clip(img_w, img_h).ok_or(Error::EmptyAfterClip)?;
        let fn_ = gt.area() as u64;
        Ok(Self { tp: 0, fp: 0, fn_, tn: (img_w * img_h) as u64 - fn_ })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub recall: f64,
    pub precision: f64,
    pub accuracy: f64,
    pub iou: f64,
    /// Per-image detection time.
    pub seconds: f64,
}

/// Closed-form TP/FP/FN/TN from interval overlaps. Both boxes are clipped
/// to the image first; a box with nothing left is an error.
pub fn pixel_counts(gt: &BBox, pred: &BBox, img_w: usize, img_h: usize) -> Result<EvalCounts> {
    if img_w == 0 || img_h == 0 {
        return Err(Error::InvalidArgument(format!("image dimensions {img_w}x{img_h}")));
    }
    let gt = gt.clip(img_w, img_h).ok_or(Error::EmptyAfterClip)?;
    let pred = pred.clip(img_w, img_h).ok_or(Error::EmptyAfterClip)?;
    let tp = gt.intersection_area(&pred) as u64;
    let fp = pred.area() as u64 - tp;
    let fn_ = gt.area() as u64 - tp;
    let tn = (img_w * img_h) as u64 - tp - fp - fn_;
    Ok(EvalCounts { tp, fp, fn_, tn })
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Recall, precision, accuracy and IoU; a zero denominator yields 0.
pub fn metrics(c: &EvalCounts) -> MetricsReport {
    MetricsReport {
        recall: ratio(c.tp, c.tp + c.fn_),
        precision: ratio(c.tp, c.tp + c.fp),
        accuracy: ratio(c.tp + c.tn, c.total()),
        iou: ratio(c.tp, c.tp + c.fp + c.fn_),
        seconds: 0.0,
    }
}

/// Dataset means in percent (time stays in seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub images: usize,
    pub recall: f64,
    pub precision: f64,
    pub accuracy: f64,
    pub iou: f64,
    pub seconds: f64,
}

/// Unweighted means over `reports`, summed in input order.
pub fn aggregate(reports: &[MetricsReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(Error::EmptyList);
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Ok(Summary {
        images: reports.len(),
        recall: 100.0 * mean(|r| r.recall),
        precision: 100.0 * mean(|r| r.precision),
        accuracy: 100.0 * mean(|r| r.accuracy),
        iou: 100.0 * mean(|r| r.iou),
        seconds: mean(|r| r.seconds),
    })
}

/// Fraction of images whose recall is at least each threshold.
pub fn recall_curve(recalls: &[f64], thresholds: &[f64]) -> Result<Vec<(f64, f64)>> {
    if recalls.is_empty() {
        return Err(Error::EmptyList);
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("recall thresholds must be sorted ascending".into()));
    }
    let n = recalls.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| (t, recalls.iter().filter(|&&r| r >= t).count() as f64 / n))
        .collect())
}

/// `0, 0.05, …, 1` – the default threshold grid.
pub fn default_thresholds() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}
