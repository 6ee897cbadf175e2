use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("geometry error in element {element}: {reason}")]
    Geometry { element: usize, reason: String },

    #[error("non-manifold face {vertices:?} shared by {count} elements")]
    NonManifold { vertices: Vec<usize>, count: usize },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("mesh classification error: {0}")]
    Classification(String),

    #[error("stabilization parameter must be positive, got {0}")]
    Stabilization(f64),

    #[error("element {element}: {reason}")]
    Solvability { element: usize, reason: String },

    #[error("factorization of the condensed trace system failed: {0}")]
    Factorization(String),

    #[error("time step {step} (t = {time:e}): {reason}")]
    Step {
        step: usize,
        time: f64,
        reason: String,
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
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
