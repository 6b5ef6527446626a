use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // image decoding and kernels
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image file: {0}")]
    CorruptFile(String),
    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("box does not intersect the image")]
    EmptyIntersection,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    // integro-differential operator
    #[error("all circle samples fall outside the image")]
    AllSamplesOutside,
    #[error("radius range too small: r_max - r_min = {0}, need at least 3")]
    RangeTooSmall(usize),
    #[error("no circle found: best score {score:.4} below floor {floor}")]
    NoCircleFound { score: f64, floor: f64 },

    // HOG + SVM
    #[error("window is {got_w}x{got_h}, descriptor expects {expected}x{expected}")]
    WrongWindowSize { got_w: usize, got_h: usize, expected: usize },
    #[error("could not place negative windows: {0} candidates rejected")]
    InsufficientNegativeSpace(usize),
    #[error("training set contains a single class")]
    DegenerateLabels,
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("image {width}x{height} is smaller than the smallest scan window {min_side}")]
    ImageSmallerThanMinScale { width: usize, height: usize, min_side: usize },
    #[error("model file: {0}")]
    ModelFormat(String),

    // evaluation
    #[error("box is empty after clipping to the image")]
    EmptyAfterClip,
    #[error("empty list")]
    EmptyList,

    // datasets
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("{path}:{line}: duplicate image id {id:?}")]
    DuplicateId { path: PathBuf, line: u64, id: String },
    #[error("{path}:{line}: image file {image:?} not found")]
    MissingImage { path: PathBuf, line: u64, image: PathBuf },

    // synthetic renderer
    #[error("invalid eye parameters: {0}")]
    InvalidParams(String),

    // harness
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("image {image_id}: {stage} failed: {source}")]
    Stage {
        image_id: String,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn at_stage(self, image_id: &str, stage: &'static str) -> Self {
        Error::Stage { image_id: image_id.to_string(), stage, source: Box::new(self) }
    }

    /// True for errors caused by bad user input (files, configs, arguments)
    /// rather than by a failure while running a detector.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::UnsupportedFormat(_)
            | Error::CorruptFile(_)
            | Error::InvalidArgument(_)
            | Error::ModelFormat(_)
            | Error::Parse { .. }
            | Error::DuplicateId { .. }
            | Error::MissingImage { .. }
            | Error::InvalidParams(_)
            | Error::Config(_)
            | Error::Io { .. } => true,
            Error::Stage { .. } => false,
            _ => false,
        }
    }
}
