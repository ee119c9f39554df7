use thiserror::Error;

/// Errors raised anywhere in the simulator, builder, training and diagnostics stack.
#[derive(Debug, Error)]
pub enum DaqcError {
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("label error: {0}")]
    Label(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("AUC undefined: {0}")]
    AucUndefined(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DaqcError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        DaqcError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 for configuration problems, 3 for data problems, 4 for resource caps.
    pub fn exit_code(&self) -> i32 {
        match self {
            DaqcError::Config(_) | DaqcError::Domain(_) => 2,
            DaqcError::Capacity(_) => 4,
            DaqcError::Index(_)
            | DaqcError::Numeric(_)
            | DaqcError::Shape(_)
            | DaqcError::Label(_)
            | DaqcError::Data(_)
            | DaqcError::Format(_)
            | DaqcError::AucUndefined(_)
            | DaqcError::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, DaqcError>;
