use std::fs;
use std::path::Path;

use crate::bbox::BBox;
use crate::error::{Error, Result};
use crate::eval::{EvalCounts, MetricsReport, Summary};
use crate::image::GrayImage;

/// One row of the per-image report.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRow {
    pub image_id: String,
    pub counts: EvalCounts,
    pub metrics: MetricsReport,
    /// `None` when the detector returned nothing for this image.
    pub detection: Option<(BBox, f64)>,
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub detector: String,
    pub train: String,
    pub test: String,
    pub summary: Summary,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidArgument(format!("{}: {other:?}", path.display())),
    }
}

fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const PER_IMAGE_HEADER: [&str; 10] =
    ["image_id", "tp", "fp", "fn", "tn", "recall", "precision", "accuracy", "iou", "seconds"];

/// Per-image CSV. With `timing = false` the seconds column is written as 0
/// so that repeated runs compare byte for byte.
pub fn write_per_image(path: &Path, rows: &[ImageRow], timing: bool) -> Result<()> {
    write_csv(
        path,
        &PER_IMAGE_HEADER,
        rows.iter().map(|r| {
            let m = &r.metrics;
            vec![
                r.image_id.clone(),
                r.counts.tp.to_string(),
                r.counts.fp.to_string(),
                r.counts.fn_.to_string(),
                r.counts.tn.to_string(),
                m.recall.to_string(),
                m.precision.to_string(),
                m.accuracy.to_string(),
                m.iou.to_string(),
                if timing { m.seconds.to_string() } else { "0".into() },
            ]
        }),
    )
}

pub fn write_recall_curve(path: &Path, curve: &[(f64, f64)]) -> Result<()> {
    write_csv(path, &["threshold", "fraction"], curve.iter().map(|(t, f)| vec![t.to_string(), f.to_string()]))
}

pub const SUMMARY_HEADER: [&str; 10] =
    ["experiment", "detector", "train", "test", "images", "recall", "precision", "accuracy", "iou", "seconds"];

pub fn write_summary(path: &Path, rows: &[SummaryRow], timing: bool) -> Result<()> {
    write_csv(
        path,
        &SUMMARY_HEADER,
        rows.iter().map(|r| {
            let s = &r.summary;
            vec![
                r.experiment.clone(),
                r.detector.clone(),
                r.train.clone(),
                r.test.clone(),
                s.images.to_string(),
                format!("{:.2}", s.recall),
                format!("{:.2}", s.precision),
                format!("{:.2}", s.accuracy),
                format!("{:.2}", s.iou),
                if timing { format!("{:.6}", s.seconds) } else { "0".into() },
            ]
        }),
    )
}

/// Fixed-width table of summary rows for terminal output.
pub fn format_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<16} {:<8} {:<16} {:<16} {:>6} {:>8} {:>9} {:>8} {:>8} {:>9}\n",
        "experiment", "detector", "train", "test", "images", "recall", "precision", "accuracy", "iou", "seconds"
    );
    for r in rows {
        let s = &r.summary;
        out += &format!(
            "{:<16} {:<8} {:<16} {:<16} {:>6} {:>8.2} {:>9.2} {:>8.2} {:>8.2} {:>9.4}\n",
            r.experiment, r.detector, r.train, r.test, s.images, s.recall, s.precision, s.accuracy, s.iou, s.seconds
        );
    }
    out
}

pub const OVERLAY_GT: u8 = 255;
pub const OVERLAY_PRED: u8 = 0;

fn draw_rect(img: &mut GrayImage, b: &BBox, value: u8) {
    let Some(b) = b.clip(img.width(), img.height()) else { return };
    let (x0, y0, x1, y1) = (b.x as usize, b.y as usize, (b.right() - 1) as usize, (b.bottom() - 1) as usize);
    for x in x0..=x1 {
        img.set(x, y0, value);
        img.set(x, y1, value);
    }
    for y in y0..=y1 {
        img.set(x0, y, value);
        img.set(x1, y, value);
    }
}

/// Copy of `img` with the ground-truth outline in white and the predicted
/// outline in black.
pub fn overlay(img: &GrayImage, gt: &BBox, pred: Option<&BBox>) -> GrayImage {
    let mut out = img.clone();
    draw_rect(&mut out, gt, OVERLAY_GT);
    if let Some(p) = pred {
        draw_rect(&mut out, p, OVERLAY_PRED);
    }
    out
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_draws_both_outlines() {
        let img = GrayImage::filled(20, 20, 100);
        let o = overlay(&img, &BBox::square(2, 2, 5), Some(&BBox::square(10, 10, 4)));
        assert_eq!(o.get(2, 2), OVERLAY_GT);
        assert_eq!(o.get(6, 4), OVERLAY_GT);
        assert_eq!(o.get(4, 4), 100);
        assert_eq!(o.get(13, 13), OVERLAY_PRED);
        assert_eq!(o.get(11, 11), 100);
        let o = overlay(&img, &BBox::square(-3, -3, 5), None);
        assert_eq!(o.get(0, 0), OVERLAY_GT);
        assert_eq!(o.get(1, 1), OVERLAY_GT);
        assert_eq!(o.get(2, 2), 100);
    }

    #[test]
    fn table_has_a_line_per_row() {
        let s = Summary { images: 3, recall: 50.0, precision: 50.0, accuracy: 90.0, iou: 40.0, seconds: 0.01 };
        let row = SummaryRow {
            experiment: "e".into(),
            detector: "daugman".into(),
            train: "-".into(),
            test: "synth".into(),
            summary: s,
        };
        assert_eq!(format_table(&[row.clone(), row]).lines().count(), 3);
    }
}
