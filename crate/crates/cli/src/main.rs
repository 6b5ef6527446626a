//! `irisloc` command-line tool.
//!
//! Exit status: 0 on success, 1 for invalid input (arguments, files,
//! configs), 2 when a detector or training run fails.

use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use irisloc::bench::{
    evaluate_detections, format_table, run_experiment, run_test_set, Detector, DetectorKind, ExperimentConfig,
    RunOptions, SummaryRow,
};
use irisloc::daugman::DaugmanConfig;
use irisloc::dataset::{
    load_detections, load_manifest, save_detections, split_filter, write_detections, DetectionRecord, Manifest, Split,
};
use irisloc::hogsvm::{HogConfig, HogSvmDetector, ScanConfig, TrainParams};
use irisloc::image::load_grayscale;
use irisloc::synth::{generate_corpus, CorpusSpec};
use irisloc::{Error, Result};

#[derive(Parser)]
#[command(name = "irisloc", version, about = "Iris location baselines and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
    All,
}

impl SplitArg {
    fn apply(self, m: Manifest) -> Manifest {
        match self {
            SplitArg::Train => split_filter(&m, Split::Train),
            SplitArg::Test => split_filter(&m, Split::Test),
            SplitArg::All => m,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorArg {
    Daugman,
    Hogsvm,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic eye corpus with annotations.csv.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of images assigned to the test split.
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
    },
    /// Train a HOG-SVM model on the train split of one or more manifests.
    Train {
        #[arg(long = "manifest", required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated regularization grid.
        #[arg(long, value_delimiter = ',')]
        c_grid: Option<Vec<f64>>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Locate the iris in one image or every image of a manifest.
    Detect {
        #[arg(long, value_enum)]
        detector: DetectorArg,
        /// HOG-SVM model file.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Daugman settings as a TOML table.
        #[arg(long)]
        daugman_config: Option<PathBuf>,
        #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
        image: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "all")]
        split: SplitArg,
        /// detections.csv to write; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Source tag written into the detections.
        #[arg(long)]
        source: Option<String>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Score a detections.csv against a manifest.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        /// Only use detections with this source tag.
        #[arg(long)]
        source: Option<String>,
        #[arg(long, value_enum, default_value = "all")]
        split: SplitArg,
        /// Report directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        overlays: bool,
    },
    /// Run a full experiment described by a TOML config.
    Benchmark {
        config: PathBuf,
        /// Write 0 for every time so reports are byte-reproducible.
        #[arg(long)]
        no_timing: bool,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth { out, count, seed, test_fraction, width, height } => {
            if count == 0 {
                return Err(Error::InvalidArgument("--count must be positive".into()));
            }
            let spec = CorpusSpec { width, height, test_fraction, ..CorpusSpec::default() };
            let m = generate_corpus(count, &spec, seed, &out)?;
            println!("wrote {} images to {}", m.len(), out.display());
            Ok(())
        }
        Command::Train { manifests, out, seed, c_grid, folds, epochs } => {
            let mut params = TrainParams::default();
            if let Some(g) = c_grid {
                params.c_grid = g;
            }
            params.folds = folds.unwrap_or(params.folds);
            params.epochs = epochs.unwrap_or(params.epochs);
            let det = train(&manifests, &params, seed)?;
            det.save(&out)?;
            println!("selected C = {}; model written to {}", det.model.train_meta.c, out.display());
            Ok(())
        }
        Command::Detect { detector, model, daugman_config, image, manifest, split, out, source, workers } => {
            let det = build_detector(detector, model.as_deref(), daugman_config.as_deref())?;
            let source = source.unwrap_or_else(|| det.kind().as_str().to_string());
            let records = match (image, manifest) {
                (Some(path), _) => detect_image(&det, &path, &source)?,
                (None, Some(path)) => {
                    let m = split.apply(load_manifest(&path)?);
                    let opts = RunOptions { timing: false, workers };
                    run_test_set(&m, &det, &opts, None)?.detections(&source)
                }
                (None, None) => unreachable!("clap requires --image or --manifest"),
            };
            match out {
                Some(p) => save_detections(&records, p),
                None => print_detections(&records),
            }
        }
        Command::Evaluate { manifest, detections, source, split, out, overlays } => {
            let m = split.apply(load_manifest(&manifest)?);
            let dets = load_detections(&detections)?;
            let opts = RunOptions { timing: false, workers: 0 };
            let overlay_dir = overlays.then(|| out.join("overlays"));
            let (report, unknown) = evaluate_detections(&m, &dets, source.as_deref(), &opts, overlay_dir.as_deref())?;
            if !unknown.is_empty() {
                eprintln!("warning: {} detections refer to images not in the manifest", unknown.len());
            }
            let tag = source.unwrap_or_else(|| "external".into());
            report.write(&out, &tag, false)?;
            let row = SummaryRow {
                experiment: "evaluate".into(),
                detector: tag,
                train: "-".into(),
                test: m.name.clone(),
                summary: report.summary,
            };
            irisloc::bench::write_summary(&out.join("summary.csv"), std::slice::from_ref(&row), false)?;
            print!("{}", format_table(&[row]));
            Ok(())
        }
        Command::Benchmark { config, no_timing, workers } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment(&cfg, &RunOptions { timing: !no_timing, workers })?;
            print!("{}", format_table(&report.summary));
            Ok(())
        }
    }
}

fn train(manifests: &[PathBuf], params: &TrainParams, seed: u64) -> Result<HogSvmDetector> {
    let mut cfg = ExperimentConfig::new("train", DetectorKind::Hogsvm, ".");
    cfg.train = manifests.to_vec();
    cfg.seed = seed;
    cfg.svm = params.clone();
    cfg.hog = HogConfig::default();
    cfg.scan = ScanConfig::default();
    irisloc::bench::train_from_manifests(&cfg)
}

fn build_detector(kind: DetectorArg, model: Option<&Path>, daugman: Option<&Path>) -> Result<Detector> {
    match kind {
        DetectorArg::Daugman => {
            let cfg = match daugman {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::Io { path: p.into(), source: e })?;
                    let cfg: DaugmanConfig =
                        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                    cfg.validate()?;
                    cfg
                }
                None => DaugmanConfig::default(),
            };
            Ok(Detector::Daugman(cfg))
        }
        DetectorArg::Hogsvm => {
            let p = model.ok_or_else(|| Error::InvalidArgument("--model is required for hogsvm".into()))?;
            Ok(Detector::HogSvm(HogSvmDetector::load(p)?))
        }
    }
}

fn detect_image(det: &Detector, path: &Path, source: &str) -> Result<Vec<DetectionRecord>> {
    let img = load_grayscale(path)?;
    let id = path.file_stem().map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned());
    let found = det.detect(&id, &img).map_err(|e| Error::Stage { image_id: id.clone(), stage: "detect", source: Box::new(e) })?;
    Ok(found
        .map(|d| DetectionRecord { image_id: id, bbox: d.bbox, score: d.score, source: source.to_string() })
        .into_iter()
        .collect())
}

fn print_detections(records: &[DetectionRecord]) -> Result<()> {
    write_detections(records, io::stdout().lock()).map_err(|e| Error::Io { path: "<stdout>".into(), source: e })
}
