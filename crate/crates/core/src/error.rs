use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown reference: {0}")]
    UnknownReference(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration of {what} would produce {size} points (cap {cap})")]
    CapExceeded { what: String, size: u128, cap: u128 },

    #[error("rejection sampling gave up after {attempts} draws: {detail}")]
    RejectionCap { attempts: usize, detail: String },

    #[error("solver returned {status:?} for {context}")]
    Solver {
        status: crate::solver::Status,
        context: String,
    },

    #[error("two-stage solve stopped after {} iterations: {source}", partial.iterations)]
    CcgFailed {
        partial: Box<crate::ccg::SolveReport>,
        #[source]
        source: Box<Error>,
    },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
