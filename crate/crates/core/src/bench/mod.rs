//! Experiment harness: configuration, per-test-set detection with timing,
//! and the CSV/PGM reports.

mod config;
mod report;
mod run;

pub use config::{DetectorKind, ExperimentConfig};
pub use report::{
    format_table, overlay, write_per_image, write_recall_curve, write_summary, ImageRow, SummaryRow, OVERLAY_GT,
    OVERLAY_PRED, PER_IMAGE_HEADER, SUMMARY_HEADER,
};
pub use run::{
    evaluate_detections, run_experiment, run_test_set, time_detection, train_from_manifests, Detector, ExperimentReport, RunOptions,
    TestSetReport,
};
