use std::path::PathBuf;

use thiserror::Error;

use crate::grid_map::CellIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the grid extent")]
    OutOfBounds { x: f64, y: f64 },
    #[error("cell {0} is outside the grid")]
    CellOutOfBounds(CellIndex),
    #[error("no such layer: {0}")]
    NoSuchLayer(String),
    #[error("terrain at cell {0} is unknown")]
    UnknownTerrain(CellIndex),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("criteria matrix has no alternatives")]
    EmptyMatrix,
    #[error("candidate set is empty")]
    EmptyCandidateSet,
    #[error("no goal is reachable from the current pose")]
    NoFeasiblePath,
    #[error("world generation failed for seed {seed} after {attempts} attempts")]
    GenerationFailed { seed: u64, attempts: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no input logs")]
    EmptyInput,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    IoUnattributed(#[from] std::io::Error),
    #[error(transparent)]
    CsvUnattributed(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attaches a file path to a bare IO or CSV error.
    pub fn with_path(self, path: impl Into<PathBuf>) -> Self {
        match self {
            Error::IoUnattributed(source) => Error::Io {
                path: path.into(),
                source,
            },
            Error::CsvUnattributed(source) => Error::Csv {
                path: path.into(),
                source,
            },
            other => other,
        }
    }
}
