use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("graph is disconnected: vertex {unreachable} is unreachable from vertex {from}")]
    Disconnected { from: usize, unreachable: usize },
    #[error("graph construction failed: {0}")]
    ConstructionFailed(String),
    #[error("dense matrix for n = {n} exceeds the cap of {cap} vertices")]
    DenseCapExceeded { n: usize, cap: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid fitting range: {0}")]
    InvalidRange(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("eigensolver failure: {0}")]
    Numeric(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("packing failed: {0}")]
    PackingFailed(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numeric,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Numeric(_) | Error::InternalInconsistency(_) | Error::DegenerateFit(_) => {
                ErrorKind::Numeric
            }
            Error::Io { .. } => ErrorKind::Io,
            Error::Context { source, .. } => source.kind(),
            _ => ErrorKind::Validation,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected, actual })
        }
    }
}
