use std::fmt;
use std::path::Path;

/// Failure classes; each maps to a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numeric => 4,
        }
    }
}

#[derive(Debug)]
pub struct Error {
    pub kind: ErrorKind,
    pub stage: Option<&'static str>,
    pub message: String,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Error {
            kind,
            stage: None,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Data, message)
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self::data(format!("{}: {err}", path.display()))
    }

    pub fn with_context(mut self, context: &str) -> Self {
        self.message = format!("{context}: {}", self.message);
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Config => "config error",
            ErrorKind::Data => "data error",
            ErrorKind::Numeric => "numeric failure",
        };
        match self.stage {
            Some(stage) => write!(f, "[{stage}] {kind}: {}", self.message),
            None => write!(f, "{kind}: {}", self.message),
        }
    }
}

impl std::error::Error for Error {}

impl From<simkern_core::Error> for Error {
    fn from(e: simkern_core::Error) -> Self {
        use simkern_core::Error as E;
        let kind = match e {
            E::InvalidParameter { .. } => ErrorKind::Config,
            E::NonFinite(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        };
        Error::new(kind, e.to_string())
    }
}

/// Attaches the pipeline stage to an error.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Into<Error>> Stage<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| {
            let mut e = e.into();
            e.stage.get_or_insert(stage);
            e
        })
    }
}
