use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("corrupt run-length encoding: runs sum to {sum}, expected {expected}")]
    RleCorrupt { sum: u64, expected: u64 },

    #[error("mask size mismatch: {a_w}x{a_h} vs {b_w}x{b_h}")]
    SizeMismatch {
        a_w: u32,
        a_h: u32,
        b_w: u32,
        b_h: u32,
    },

    #[error("tile out of bounds: {0}")]
    OutOfBounds(String),

    #[error("degenerate annotation: zero area")]
    ZeroArea,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("pnm: {0}")]
    Pnm(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: {source}")]
    Record {
        path: PathBuf,
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("record validation failed: {0}")]
    Validation(String),

    #[error("unknown tile index {index} (grid has {len} tiles)")]
    UnknownTile { index: usize, len: usize },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
