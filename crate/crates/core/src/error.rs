use thiserror::Error;

/// Errors produced by frame construction, processing and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("warp map construction failed: {0}")]
    MapConstruction(String),

    #[error("frame conditions violated: {0}")]
    FrameCondition(String),

    #[error("band {band}: {reason}")]
    Atom { band: usize, reason: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("signal: {0}")]
    Signal(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
