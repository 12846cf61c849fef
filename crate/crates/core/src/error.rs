use std::path::PathBuf;

use crate::osc::OscError;
use crate::vae::TrainHistory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("network error: {0}")]
    Network(#[source] std::io::Error),

    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("truncated {what}: expected {expected} bytes, found {found}")]
    Truncated {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{count} trailing bytes after payload")]
    TrailingBytes { count: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("timestamps must be strictly increasing (frame {index})")]
    NonMonotonicTimestamps { index: usize },

    #[error("time regression on channel {channel}: {t} < {last}")]
    TimeRegression { channel: usize, t: f64, last: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("CSV parse error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { expected: u16, found: u16 },

    #[error("stats not fitted")]
    StatsNotFitted,

    #[error("latent stats were fitted for model {stats} but the model fingerprint is {model}")]
    FingerprintMismatch { stats: String, model: String },

    #[error("corpus too small: {frames} frames, need at least {needed}")]
    CorpusTooSmall { frames: usize, needed: usize },

    #[error("training diverged at epoch {epoch}")]
    Diverged {
        epoch: usize,
        history: Box<TrainHistory>,
    },

    #[error("too few frames for metric: {0}")]
    DegenerateCorpus(String),

    #[error(transparent)]
    Osc(#[from] OscError),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Data errors are problems with the inputs (files, corpora, checkpoints);
    /// everything else is a runtime failure.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::Network(_) | Error::Diverged { .. } | Error::InvalidConfig(_)
        )
    }

    /// Process exit status: 2 for bad configuration, 3 for bad input data,
    /// 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 2,
            e if e.is_data_error() => 3,
            _ => 1,
        }
    }
}
