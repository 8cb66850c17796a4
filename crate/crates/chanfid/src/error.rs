use std::path::PathBuf;

use chanfid_core::CptpReport;
use thiserror::Error;

/// Process exit codes. These values are part of the CLI contract.
pub mod exit {
    pub const OK: i32 = 0;
    /// A verification suite reported a failing check.
    pub const CHECK_FAILED: i32 = 1;
    pub const BAD_INPUT: i32 = 2;
    pub const NOT_CPTP: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    BadInput(String),

    #[error("invalid channel file {path}: {msg}")]
    ChannelFile { path: PathBuf, msg: String },

    #[error(
        "channel is not CPTP: min eigenvalue {:e}, trace-preservation deviation {:e}",
        .0.min_eigenvalue,
        .0.tp_deviation
    )]
    NotCptp(CptpReport),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("solver failed: {0}")]
    Solver(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BadInput(_) | Error::ChannelFile { .. } => exit::BAD_INPUT,
            Error::NotCptp(_) => exit::NOT_CPTP,
            Error::Io { .. } => exit::IO,
            Error::Solver(_) => exit::NOT_CONVERGED,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<chanfid_core::ReductionError> for Error {
    fn from(e: chanfid_core::ReductionError) -> Self {
        use chanfid_core::ReductionError as R;
        match e {
            R::NotCptp(report) => Error::NotCptp(report),
            R::ZeroLevel | R::ZeroMessageDimension | R::Channel(_) => {
                Error::BadInput(e.to_string())
            }
            other => Error::Solver(other.to_string()),
        }
    }
}
