use std::path::PathBuf;

/// Errors raised anywhere in the hashing, detection and evaluation pipeline.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image: {0}")]
    CorruptImage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },

    #[error("expected a {expected_w}x{expected_h} image, got {width}x{height}")]
    DimensionMismatch {
        expected_w: u32,
        expected_h: u32,
        width: u32,
        height: u32,
    },

    #[error("feature {index} is not finite")]
    NonFiniteFeature { index: usize },

    #[error("video contains no frames")]
    EmptyVideo,

    #[error("frame {index} is {width}x{height}, expected {expected_w}x{expected_h}")]
    HeterogeneousDimensions {
        index: usize,
        width: u32,
        height: u32,
        expected_w: u32,
        expected_h: u32,
    },

    #[error("frame directory {dir}: {reason}")]
    FrameDirectory { dir: PathBuf, reason: String },

    #[error("invalid grid side {0}, must be at least 2")]
    InvalidGrid(usize),

    #[error("invalid tile size {width}x{height}, both sides must be at least 8")]
    InvalidTileSize { width: u32, height: u32 },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("truncated file: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },

    #[error("inconsistent header: {0}")]
    InconsistentHeader(String),

    #[error("index {index} out of bounds for length {len}")]
    OutOfBounds { index: usize, len: usize },

    #[error("operation {0} requires donor frames")]
    MissingDonor(&'static str),

    #[error("operation {0} does not take donor frames")]
    UnexpectedDonor(&'static str),

    #[error("invalid tamper positions: {0}")]
    InvalidPositions(String),

    #[error("jpeg quality {0} outside 1..=100")]
    InvalidQuality(u8),

    #[error("resize scale {0} outside (0, 1]")]
    InvalidScale(f64),

    #[error("resizing {width}x{height} by {scale} yields an empty frame")]
    DegenerateOutput { width: u32, height: u32, scale: f64 },

    #[error("no blocks to evaluate")]
    EmptyEvaluation,

    #[error("average precision is not defined without positive labels")]
    NoPositives,

    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },

    #[error("threshold sweep is empty")]
    EmptySweep,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
