use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use super::config::{DetectorKind, ExperimentConfig};
use super::report::{
    create_dir, overlay, write_per_image, write_recall_curve, write_summary, ImageRow, SummaryRow,
};
use crate::daugman::{circle_to_bbox, daugman_locate, DaugmanConfig};
use crate::dataset::{
    join_detections, load_detections, load_manifest, save_detections, split_filter, Annotation, DetectionRecord,
    Manifest, Split,
};
use crate::error::{Error, Result};
use crate::eval::{aggregate, default_thresholds, metrics, pixel_counts, recall_curve, EvalCounts, Summary};
use crate::hogsvm::{Detection, HogSvmDetector, TrainingSet};
use crate::image::{load_grayscale, save_pgm, GrayImage};

/// A ready-to-run detector for one test set.
#[derive(Debug, Clone)]
pub enum Detector {
    Daugman(DaugmanConfig),
    HogSvm(HogSvmDetector),
    /// Precomputed boxes keyed by image id.
    External(HashMap<String, DetectionRecord>),
}

impl Detector {
    pub fn kind(&self) -> DetectorKind {
        match self {
            Detector::Daugman(_) => DetectorKind::Daugman,
            Detector::HogSvm(_) => DetectorKind::Hogsvm,
            Detector::External(_) => DetectorKind::External,
        }
    }

    /// `Ok(None)` is a miss: no circle above the score floor, a window below
    /// the margin, or no external detection for this id.
    pub fn detect(&self, image_id: &str, img: &GrayImage) -> Result<Option<Detection>> {
        match self {
            Detector::Daugman(cfg) => match daugman_locate(img, cfg) {
                Ok((c, score)) => Ok(Some(Detection { bbox: circle_to_bbox(c, img.width(), img.height()), score })),
                Err(Error::NoCircleFound { .. }) => Ok(None),
                Err(e) => Err(e),
            },
            Detector::HogSvm(d) => d.detect_thresholded(img),
            Detector::External(by_id) => Ok(by_id.get(image_id).map(|d| Detection { bbox: d.bbox, score: d.score })),
        }
    }
}

/// Wall-clock time of one detect call. Decoding and report I/O happen
/// outside it.
pub fn time_detection(det: &Detector, image_id: &str, img: &GrayImage) -> (Result<Option<Detection>>, f64) {
    let start = Instant::now();
    let out = det.detect(image_id, img);
    (out, start.elapsed().as_secs_f64())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Record per-image seconds; off makes every report byte-reproducible.
    pub timing: bool,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { timing: true, workers: 0 }
    }
}

impl RunOptions {
    fn worker_count(&self, jobs: usize) -> usize {
        let n = if self.workers == 0 { thread::available_parallelism().map_or(1, |n| n.get()) } else { self.workers };
        n.clamp(1, jobs.max(1))
    }
}

/// Reports of one test manifest.
#[derive(Debug, Clone)]
pub struct TestSetReport {
    pub name: String,
    pub rows: Vec<ImageRow>,
    pub summary: Summary,
    pub curve: Vec<(f64, f64)>,
}

impl TestSetReport {
    /// Detections in manifest order, misses left out.
    pub fn detections(&self, source: &str) -> Vec<DetectionRecord> {
        self.rows
            .iter()
            .filter_map(|r| {
                r.detection.map(|(bbox, score)| DetectionRecord {
                    image_id: r.image_id.clone(),
                    bbox,
                    score,
                    source: source.to_string(),
                })
            })
            .collect()
    }

    /// Writes `per_image.csv`, `recall_curve.csv` and `detections.csv`.
    pub fn write(&self, dir: &Path, source: &str, timing: bool) -> Result<()> {
        create_dir(dir)?;
        write_per_image(&dir.join("per_image.csv"), &self.rows, timing)?;
        write_recall_curve(&dir.join("recall_curve.csv"), &self.curve)?;
        save_detections(&self.detections(source), dir.join("detections.csv"))
    }
}

fn image_row(det: &Detector, m: &Manifest, a: &Annotation, overlays: Option<&Path>) -> Result<ImageRow> {
    let img = load_grayscale(m.image_path(a)).map_err(|e| e.at_stage(&a.image_id, "load"))?;
    let (found, seconds) = time_detection(det, &a.image_id, &img);
    let found = found.map_err(|e| e.at_stage(&a.image_id, "detect"))?;
    let (w, h) = (img.width(), img.height());
    let counts = match &found {
        Some(d) => pixel_counts(&a.bbox, &d.bbox, w, h),
        None => EvalCounts::missed(&a.bbox, w, h),
    }
    .map_err(|e| e.at_stage(&a.image_id, "evaluate"))?;
    if let Some(dir) = overlays {
        let o = overlay(&img, &a.bbox, found.as_ref().map(|d| &d.bbox));
        save_pgm(&o, dir.join(format!("{}.pgm", a.image_id))).map_err(|e| e.at_stage(&a.image_id, "overlay"))?;
    }
    Ok(ImageRow {
        image_id: a.image_id.clone(),
        counts,
        metrics: crate::eval::MetricsReport { seconds, ..metrics(&counts) },
        detection: found.map(|d| (d.bbox, d.score)),
    })
}

/// Detect and score every entry of `manifest`. Rows keep manifest order
/// whatever the worker count; the first failing entry in that order is the
/// error returned.
pub fn run_test_set(
    manifest: &Manifest,
    det: &Detector,
    opts: &RunOptions,
    overlays: Option<&Path>,
) -> Result<TestSetReport> {
    if manifest.entries.is_empty() {
        return Err(Error::Config(format!("test set {:?} has no images", manifest.name)));
    }
    if let Some(dir) = overlays {
        create_dir(dir)?;
    }
    let n = manifest.entries.len();
    let slots: Vec<Mutex<Option<Result<ImageRow>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    thread::scope(|s| {
        for _ in 0..opts.worker_count(n) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let row = image_row(det, manifest, &manifest.entries[i], overlays);
                let failed = row.is_err();
                *slots[i].lock().unwrap() = Some(row);
                if failed {
                    // Later entries are not needed once an earlier one fails.
                    next.fetch_max(n, Ordering::Relaxed);
                }
            });
        }
    });
    let mut rows = Vec::with_capacity(n);
    for slot in slots {
        match slot.into_inner().unwrap() {
            Some(row) => {
                let mut row = row?;
                if !opts.timing {
                    row.metrics.seconds = 0.0;
                }
                rows.push(row)
            }
            None => unreachable!("an earlier entry failed"),
        }
    }
    let summary = aggregate(&rows.iter().map(|r| r.metrics).collect::<Vec<_>>())?;
    let recalls: Vec<f64> = rows.iter().map(|r| r.metrics.recall).collect();
    let curve = recall_curve(&recalls, &default_thresholds())?;
    Ok(TestSetReport { name: manifest.name.clone(), rows, summary, curve })
}

/// Score precomputed detections against a manifest. Entries with no
/// detection are misses; detections with unknown ids are returned.
pub fn evaluate_detections(
    manifest: &Manifest,
    detections: &[DetectionRecord],
    source: Option<&str>,
    opts: &RunOptions,
    overlays: Option<&Path>,
) -> Result<(TestSetReport, Vec<String>)> {
    let joined = join_detections(manifest, detections, source)?;
    let by_id = joined
        .pairs
        .iter()
        .filter_map(|(a, d)| d.map(|d| (a.image_id.clone(), d.clone())))
        .collect();
    let report = run_test_set(manifest, &Detector::External(by_id), opts, overlays)?;
    Ok((report, joined.unknown_ids))
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub sets: Vec<TestSetReport>,
    pub summary: Vec<SummaryRow>,
    /// Set when a HOG-SVM model was trained during the run.
    pub model: Option<HogSvmDetector>,
}

fn canonical(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Train images must not reappear in any test set.
fn check_disjoint(train: &[Manifest], test: &[Manifest]) -> Result<()> {
    let seen: HashSet<PathBuf> =
        train.iter().flat_map(|m| m.entries.iter().map(|a| canonical(&m.image_path(a)))).collect();
    for m in test {
        for a in &m.entries {
            if seen.contains(&canonical(&m.image_path(a))) {
                return Err(Error::Config(format!(
                    "test image {:?} of {:?} is also a training image",
                    a.image_id, m.name
                )));
            }
        }
    }
    Ok(())
}

/// Train on the train split of every `cfg.train` manifest, in order.
pub fn train_from_manifests(cfg: &ExperimentConfig) -> Result<HogSvmDetector> {
    train_hogsvm(cfg, &load_split(&cfg.train, Split::Train)?)
}

fn load_split(paths: &[PathBuf], split: Split) -> Result<Vec<Manifest>> {
    paths.iter().map(|p| load_manifest(p).map(|m| split_filter(&m, split))).collect()
}

fn train_hogsvm(cfg: &ExperimentConfig, train: &[Manifest]) -> Result<HogSvmDetector> {
    let mut set = TrainingSet::new(cfg.hog.clone(), cfg.scan.clone(), cfg.seed)?;
    for m in train {
        for a in &m.entries {
            let img = load_grayscale(m.image_path(a)).map_err(|e| e.at_stage(&a.image_id, "load"))?;
            set.add(&img, &a.bbox).map_err(|e| e.at_stage(&a.image_id, "train"))?;
        }
    }
    if set.is_empty() {
        return Err(Error::Config("the train manifests contain no train-split images".into()));
    }
    set.fit(&cfg.svm)
}

/// Unique directory names for the test sets: the dataset name, with `-2`,
/// `-3`, ... appended on repeats.
fn set_names(test: &[Manifest]) -> Vec<String> {
    let mut count: HashMap<&str, usize> = HashMap::new();
    test.iter()
        .map(|m| {
            let c = count.entry(m.name.as_str()).or_default();
            *c += 1;
            if *c == 1 {
                m.name.clone()
            } else {
                format!("{}-{}", m.name, c)
            }
        })
        .collect()
}

/// Run one experiment end to end and write its reports under
/// `cfg.output_dir`: `summary.csv`, one directory per test set, and
/// `model.json` when a model was trained.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    cfg.validate()?;
    let train = load_split(&cfg.train, Split::Train)?;
    let test = load_split(&cfg.test, Split::Test)?;
    let external = match &cfg.detections {
        Some(p) if cfg.detector == DetectorKind::External => load_detections(p)?,
        _ => Vec::new(),
    };
    if cfg.detector == DetectorKind::Hogsvm && cfg.model.is_none() {
        check_disjoint(&train, &test)?;
    }

    create_dir(&cfg.output_dir)?;
    let mut trained = None;
    let hogsvm = match (cfg.detector, &cfg.model) {
        (DetectorKind::Hogsvm, Some(p)) => Some(HogSvmDetector::load(p)?),
        (DetectorKind::Hogsvm, None) => {
            let d = train_hogsvm(cfg, &train)?;
            d.save(cfg.output_dir.join("model.json"))?;
            trained = Some(d.clone());
            Some(d)
        }
        _ => None,
    };
    let train_label = match (cfg.detector, &cfg.model) {
        (DetectorKind::Hogsvm, None) => train.iter().map(|m| m.name.as_str()).collect::<Vec<_>>().join("+"),
        (DetectorKind::Hogsvm, Some(_)) => "model".to_string(),
        _ => "-".to_string(),
    };
    let source = cfg.source.clone().unwrap_or_else(|| cfg.detector.as_str().to_string());

    let mut sets = Vec::new();
    let mut summary = Vec::new();
    for (m, name) in test.iter().zip(set_names(&test)) {
        let dir = cfg.output_dir.join(&name);
        let overlays = cfg.overlays.then(|| dir.join("overlays"));
        let report = match cfg.detector {
            DetectorKind::Daugman => {
                run_test_set(m, &Detector::Daugman(cfg.daugman_for(&m.name).clone()), opts, overlays.as_deref())?
            }
            DetectorKind::Hogsvm => {
                let d = Detector::HogSvm(hogsvm.clone().expect("model is loaded or trained"));
                run_test_set(m, &d, opts, overlays.as_deref())?
            }
            DetectorKind::External => {
                evaluate_detections(m, &external, cfg.source.as_deref(), opts, overlays.as_deref())?.0
            }
        };
        report.write(&dir, &source, opts.timing)?;
        summary.push(SummaryRow {
            experiment: cfg.name.clone(),
            detector: cfg.detector.as_str().to_string(),
            train: train_label.clone(),
            test: name.clone(),
            summary: report.summary,
        });
        sets.push(TestSetReport { name, ..report });
    }
    write_summary(&cfg.output_dir.join("summary.csv"), &summary, opts.timing)?;
    Ok(ExperimentReport { sets, summary, model: trained })
}
