use thiserror::Error;

/// Errors produced by generation, detection, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("segment [{start}, {end}) out of bounds for series of length {len}")]
    SegmentOutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("Poisson rate must be finite and non-negative, got {0}")]
    InvalidRate(f64),

    #[error("series too short: need at least {need} timesteps, got {got}")]
    SeriesTooShort { need: usize, got: usize },

    #[error("score/label length mismatch: {scores} scores vs {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },

    #[error("precision-recall curve undefined: evaluated region is {0}")]
    DegenerateLabels(&'static str),

    #[error("unknown detector id `{0}` (valid: {1})")]
    UnknownDetector(String, String),

    #[error("unknown smoother id `{0}` (valid: {1})")]
    UnknownSmoother(String, String),

    #[error("detector `{0}` requires generator ground truth (true rates and transition matrix)")]
    MissingTruth(&'static str),

    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
