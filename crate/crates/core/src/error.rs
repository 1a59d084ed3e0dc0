use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a module invariant.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// A state or output became non-finite.
    #[error("numerical blow-up{} at t = {time} s: {what}", vehicle_suffix(.vehicle))]
    Numerical {
        vehicle: Option<usize>,
        time: f64,
        what: String,
    },

    #[error("eigenvalue solve did not converge for matrix {matrix}")]
    EigenSolve { matrix: String },

    #[error("scheduling contract violated: {0}")]
    Contract(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn vehicle_suffix(vehicle: &Option<usize>) -> String {
    match vehicle {
        Some(v) => format!(" in vehicle {}", v + 1),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn numerical(time: f64, what: impl Into<String>) -> Self {
        Error::Numerical {
            vehicle: None,
            time,
            what: what.into(),
        }
    }

    /// Attach the (0-based) vehicle index to a numerical error.
    pub fn for_vehicle(self, index: usize) -> Self {
        match self {
            Error::Numerical { time, what, .. } => Error::Numerical {
                vehicle: Some(index),
                time,
                what,
            },
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
