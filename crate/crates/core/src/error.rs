use std::path::PathBuf;

pub type Result<T, E = KdsError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum KdsError {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to decode {path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: ::image::ImageError,
    },

    #[error("failed to encode {path}: {source}")]
    Encode {
        path: PathBuf,
        #[source]
        source: ::image::ImageError,
    },

    #[error("scan {scan_id} has no decodable slices ({unreadable} unreadable files)")]
    EmptyScan { scan_id: String, unreadable: usize },

    #[error("need at least 2 samples for a bandwidth estimate, got {0}")]
    InsufficientSamples(usize),

    #[error("no foreground pixel in any mask of the volume")]
    EmptyMaskVolume,

    #[error("lung-area series is empty")]
    EmptySeries,

    #[error("masks have mismatched dimensions: {0}x{1} vs {2}x{3}")]
    MaskDimensions(usize, usize, usize, usize),

    #[error("invalid filter kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl KdsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KdsError::Io {
            path: path.into(),
            source,
        }
    }
}
