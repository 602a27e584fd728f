use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("labels contain a single class")]
    SingleClass,

    #[error("no positive entries")]
    NoPositives,

    #[error("distribution is not absolutely continuous w.r.t. the reference at index {0}")]
    NotAbsolutelyContinuous(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("unknown term id {0}")]
    UnknownTerm(u32),

    #[error("all relevance grades are zero")]
    ZeroIdealGain,

    #[error("model provenance mismatch: {0:#018x} vs {1:#018x}")]
    ProvenanceMismatch(u64, u64),

    #[error("column {0} has no fitted standardization statistics")]
    UnfittedColumn(usize),

    #[error("malformed clique {index}: {reason}")]
    MalformedClique { index: usize, reason: &'static str },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn ensure_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
