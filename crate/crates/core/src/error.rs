use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coordinate lat={lat}, lon={lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },

    #[error("empty street network")]
    EmptyStreetNetwork,

    #[error("layer `{0}` has no point geometry; the spatial lens needs points")]
    UnsupportedLayer(String),

    #[error("layer `{0}` has no timestamps")]
    Untimestamped(String),

    #[error("station `{station}` has no value for month {month}")]
    MissingMonth { station: String, month: u32 },

    #[error("missing layer: {0}")]
    MissingLayer(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset has a single class; both labels are required")]
    SingleClass,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("exact Shapley enumeration supports at most {max} features, got {got}; use monte_carlo")]
    ExactShapleyTooLarge { got: usize, max: usize },

    #[error("{file}: {location}: {message}")]
    Data {
        file: String,
        location: String,
        message: String,
    },

    #[error("{file}: {bad} of {total} rows invalid (limit 1%); first errors: {first}")]
    TooManyBadRows {
        file: String,
        bad: usize,
        total: usize,
        first: String,
    },

    #[error("workspace format version {found} is not supported (expected {expected}); re-run the pipeline to migrate")]
    VersionMismatch { found: u8, expected: u8 },

    #[error("corrupt workspace file: {0}")]
    Corrupt(String),

    #[error("config: {0}")]
    Config(String),

    #[error("stage `{stage}` has not been run; run `urbanlens {command}` first")]
    StageMissing {
        stage: &'static str,
        command: &'static str,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI, one per error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 3,
            Error::Data { .. }
            | Error::TooManyBadRows { .. }
            | Error::InvalidCoordinate { .. }
            | Error::EmptyStreetNetwork
            | Error::MissingLayer(_)
            | Error::MissingMonth { .. } => 4,
            Error::StageMissing { .. } => 5,
            Error::VersionMismatch { .. } | Error::Corrupt(_) => 6,
            Error::Io { .. } => 7,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(file: impl Into<String>, location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Data {
            file: file.into(),
            location: location.into(),
            message: message.into(),
        }
    }
}
